//! Two-dimensional triangular and quadrilateral meshes.
//!
//! A [`Mesh`] is a homogeneous collection of counter-clockwise elements over a
//! list of nodes. Construction only checks arity and index range; geometric and
//! topological validity is reported by [`validate`] as data so callers can
//! inspect every problem at once.
//!
//! The generators reproduce the fixture meshes used throughout the crate:
//! tensor-product grids, regular polygon rings (hexagon, heptagon, ...), the
//! hexagon with one split outer triangle, the refined hexagonal annulus and the
//! anisotropic strip.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance (times the mesh diameter) under which two nodes coincide.
pub const COINCIDENT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn polar(radius: f64, angle: f64) -> Self {
        Point2::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(&self, other: &Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Twice the signed area of the triangle `a b c` (positive when counter-clockwise).
pub fn cross3(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    Tri,
    Quad,
}

impl ElementKind {
    pub fn arity(self) -> usize {
        match self {
            ElementKind::Tri => 3,
            ElementKind::Quad => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Element {
    pub kind: ElementKind,
    pub nodes: Vec<usize>,
}

impl Element {
    pub fn tri(a: usize, b: usize, c: usize) -> Self {
        Element {
            kind: ElementKind::Tri,
            nodes: vec![a, b, c],
        }
    }

    pub fn quad(a: usize, b: usize, c: usize, d: usize) -> Self {
        Element {
            kind: ElementKind::Quad,
            nodes: vec![a, b, c, d],
        }
    }

    /// Element sides as node pairs in traversal order (quad diagonals excluded).
    pub fn sides(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.nodes.len();
        (0..n).map(move |i| (self.nodes[i], self.nodes[(i + 1) % n]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeshKind {
    Triangular,
    Quadrilateral,
}

impl MeshKind {
    pub fn element_kind(self) -> ElementKind {
        match self {
            MeshKind::Triangular => ElementKind::Tri,
            MeshKind::Quadrilateral => ElementKind::Quad,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("element {element} has {found} nodes, expected {expected}")]
    Arity {
        element: usize,
        expected: usize,
        found: usize,
    },
    #[error("element {element} references node {node}, but the mesh has {n_nodes} nodes")]
    IndexOutOfRange {
        element: usize,
        node: usize,
        n_nodes: usize,
    },
    #[error("invalid mesh: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("operation requires a {expected:?} mesh")]
    WrongKind { expected: MeshKind },
    #[error("invalid generator parameter: {0}")]
    Parameter(String),
    #[error("embedding failed: {0}")]
    Embed(String),
}

/// A single mesh-validity violation; see [`validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Violation {
    NonFiniteNode {
        node: usize,
    },
    DegenerateElement {
        element: usize,
    },
    Orientation {
        element: usize,
        signed_area: f64,
    },
    NonConvexQuad {
        element: usize,
    },
    OverSharedEdge {
        a: usize,
        b: usize,
        count: usize,
    },
    CrossingEdges {
        first: (usize, usize),
        second: (usize, usize),
    },
    CoincidentNodes {
        a: usize,
        b: usize,
    },
    UnusedNode {
        node: usize,
    },
    Disconnected {
        components: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFiniteNode { node } => {
                write!(f, "node {node} has a non-finite coordinate")
            }
            Violation::DegenerateElement { element } => write!(f, "degenerate element {element}"),
            Violation::Orientation {
                element,
                signed_area,
            } => {
                write!(
                    f,
                    "orientation: element {element} has signed area {signed_area:e}"
                )
            }
            Violation::NonConvexQuad { element } => {
                write!(f, "quad element {element} is not convex")
            }
            Violation::OverSharedEdge { a, b, count } => {
                write!(f, "edge ({a},{b}) is shared by {count} elements")
            }
            Violation::CrossingEdges { first, second } => {
                write!(f, "edges {first:?} and {second:?} cross")
            }
            Violation::CoincidentNodes { a, b } => write!(f, "nodes {a} and {b} coincide"),
            Violation::UnusedNode { node } => write!(f, "node {node} belongs to no element"),
            Violation::Disconnected { components } => {
                write!(f, "element adjacency graph has {components} components")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point2>,
    elements: Vec<Element>,
    kind: MeshKind,
}

impl Mesh {
    /// Builds a mesh after checking element arity and node indices.
    pub fn new(
        kind: MeshKind,
        nodes: Vec<Point2>,
        elements: Vec<Element>,
    ) -> Result<Self, MeshError> {
        let expected = kind.element_kind();
        for (e, el) in elements.iter().enumerate() {
            if el.kind != expected || el.nodes.len() != expected.arity() {
                return Err(MeshError::Arity {
                    element: e,
                    expected: expected.arity(),
                    found: el.nodes.len(),
                });
            }
            if let Some(&node) = el.nodes.iter().find(|&&v| v >= nodes.len()) {
                return Err(MeshError::IndexOutOfRange {
                    element: e,
                    node,
                    n_nodes: nodes.len(),
                });
            }
        }
        Ok(Mesh {
            nodes,
            elements,
            kind,
        })
    }

    /// Builds a mesh and rejects it unless [`validate`] is clean.
    pub fn new_valid(
        kind: MeshKind,
        nodes: Vec<Point2>,
        elements: Vec<Element>,
    ) -> Result<Self, MeshError> {
        let mesh = Mesh::new(kind, nodes, elements)?;
        mesh.ensure_valid()?;
        Ok(mesh)
    }

    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_points(&self, e: usize) -> Vec<Point2> {
        self.elements[e]
            .nodes
            .iter()
            .map(|&i| self.nodes[i])
            .collect()
    }

    /// Largest distance between two nodes (computed over the bounding box diagonal).
    pub fn diameter(&self) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        let (mut x0, mut y0, mut x1, mut y1) = (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for p in &self.nodes {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        (x1 - x0).hypot(y1 - y0)
    }

    /// Signed area of element `e` (shoelace formula).
    pub fn signed_area(&self, e: usize) -> f64 {
        let pts = self.element_points(e);
        let n = pts.len();
        0.5 * (0..n)
            .map(|i| {
                let (p, q) = (pts[i], pts[(i + 1) % n]);
                p.x * q.y - q.x * p.y
            })
            .sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        (0..self.elements.len()).map(|e| self.signed_area(e)).sum()
    }

    pub fn ensure_valid(&self) -> Result<(), MeshError> {
        let violations = validate(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(MeshError::Invalid(violations))
        }
    }

    /// Unordered sides with the number of elements owning each.
    pub fn side_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut counts = BTreeMap::new();
        for el in &self.elements {
            for (a, b) in el.sides() {
                if a != b {
                    *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
                }
            }
        }
        counts
    }

    /// Relabels the nodes: node `i` of `self` becomes node `perm[i]`.
    pub fn permute_nodes(&self, perm: &[usize]) -> Result<Mesh, MeshError> {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(MeshError::Parameter(
                "node permutation is not a bijection".into(),
            ));
        }
        let mut nodes = vec![Point2::new(0.0, 0.0); n];
        for (i, &p) in perm.iter().enumerate() {
            nodes[p] = self.nodes[i];
        }
        let elements = self
            .elements
            .iter()
            .map(|el| Element {
                kind: el.kind,
                nodes: el.nodes.iter().map(|&v| perm[v]).collect(),
            })
            .collect();
        Mesh::new(self.kind, nodes, elements)
    }

    /// Same mesh with the elements listed in a different order.
    pub fn reorder_elements(&self, order: &[usize]) -> Result<Mesh, MeshError> {
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..self.elements.len()).collect::<Vec<_>>() {
            return Err(MeshError::Parameter(
                "element order is not a permutation".into(),
            ));
        }
        let elements = order.iter().map(|&e| self.elements[e].clone()).collect();
        Mesh::new(self.kind, self.nodes.clone(), elements)
    }
}

fn segments_cross(p1: &Point2, p2: &Point2, q1: &Point2, q2: &Point2) -> bool {
    let d1 = cross3(q1, q2, p1);
    let d2 = cross3(q1, q2, p2);
    let d3 = cross3(p1, p2, q1);
    let d4 = cross3(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn quad_is_convex(pts: &[Point2]) -> bool {
    (0..4).all(|i| cross3(&pts[i], &pts[(i + 1) % 4], &pts[(i + 2) % 4]) > 0.0)
}

/// Every invariant violation of `mesh`, in a deterministic order.
pub fn validate(mesh: &Mesh) -> Vec<Violation> {
    let mut out = Vec::new();
    let nodes = &mesh.nodes;

    for (i, p) in nodes.iter().enumerate() {
        if !p.is_finite() {
            out.push(Violation::NonFiniteNode { node: i });
        }
    }

    let mut degenerate = vec![false; mesh.elements.len()];
    for (e, el) in mesh.elements.iter().enumerate() {
        let distinct: BTreeSet<_> = el.nodes.iter().collect();
        if distinct.len() != el.nodes.len() {
            degenerate[e] = true;
            out.push(Violation::DegenerateElement { element: e });
            continue;
        }
        let area = mesh.signed_area(e);
        if area == 0.0 || !area.is_finite() {
            degenerate[e] = true;
            out.push(Violation::DegenerateElement { element: e });
        } else if area < 0.0 {
            out.push(Violation::Orientation {
                element: e,
                signed_area: area,
            });
        } else if el.kind == ElementKind::Quad && !quad_is_convex(&mesh.element_points(e)) {
            out.push(Violation::NonConvexQuad { element: e });
        }
    }

    let sides = mesh.side_counts();
    for (&(a, b), &count) in &sides {
        if count > 2 {
            out.push(Violation::OverSharedEdge { a, b, count });
        }
    }

    let edges: Vec<_> = sides.keys().copied().collect();
    for (i, &(a, b)) in edges.iter().enumerate() {
        for &(c, d) in &edges[i + 1..] {
            if a == c || a == d || b == c || b == d {
                continue;
            }
            if segments_cross(&nodes[a], &nodes[b], &nodes[c], &nodes[d]) {
                out.push(Violation::CrossingEdges {
                    first: (a, b),
                    second: (c, d),
                });
            }
        }
    }

    let tol = COINCIDENT_TOL * mesh.diameter();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if nodes[i].dist(&nodes[j]) <= tol {
                out.push(Violation::CoincidentNodes { a: i, b: j });
            }
        }
    }

    let mut used = vec![false; nodes.len()];
    for el in &mesh.elements {
        for &v in &el.nodes {
            used[v] = true;
        }
    }
    for (i, &u) in used.iter().enumerate() {
        if !u {
            out.push(Violation::UnusedNode { node: i });
        }
    }

    let components = element_components(mesh, &degenerate);
    if components > 1 {
        out.push(Violation::Disconnected { components });
    }
    out
}

/// Connected components of the element graph (elements adjacent when sharing a side).
fn element_components(mesh: &Mesh, skip: &[bool]) -> usize {
    let n = mesh.elements.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut owner: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (e, el) in mesh.elements.iter().enumerate() {
        if skip[e] {
            continue;
        }
        for (a, b) in el.sides() {
            let key = (a.min(b), a.max(b));
            if let Some(&other) = owner.get(&key) {
                let (ra, rb) = (find(&mut parent, e), find(&mut parent, other));
                parent[ra] = rb;
            } else {
                owner.insert(key, e);
            }
        }
    }
    let roots: BTreeSet<_> = (0..n)
        .filter(|&e| !skip[e])
        .map(|e| find(&mut parent, e))
        .collect();
    roots.len()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryPartition {
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
}

impl BoundaryPartition {
    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary.binary_search(&node).is_ok()
    }
}

/// Boundary nodes are the endpoints of sides owned by exactly one element.
pub fn boundary_partition(mesh: &Mesh) -> Result<BoundaryPartition, MeshError> {
    mesh.ensure_valid()?;
    Ok(boundary_partition_unchecked(mesh))
}

pub(crate) fn boundary_partition_unchecked(mesh: &Mesh) -> BoundaryPartition {
    let mut on_boundary = vec![false; mesh.n_nodes()];
    for (&(a, b), &count) in &mesh.side_counts() {
        if count == 1 {
            on_boundary[a] = true;
            on_boundary[b] = true;
        }
    }
    let (boundary, interior): (Vec<usize>, Vec<usize>) =
        (0..mesh.n_nodes()).partition(|&i| on_boundary[i]);
    BoundaryPartition { interior, boundary }
}

/// Interior angles of each triangle, listed at its local vertices in order.
pub fn interior_angles(mesh: &Mesh) -> Result<Vec<[f64; 3]>, MeshError> {
    if mesh.kind != MeshKind::Triangular {
        return Err(MeshError::WrongKind {
            expected: MeshKind::Triangular,
        });
    }
    Ok((0..mesh.n_elements())
        .map(|e| {
            let p = mesh.element_points(e);
            triangle_angles(&p[0], &p[1], &p[2])
        })
        .collect())
}

pub fn triangle_angles(a: &Point2, b: &Point2, c: &Point2) -> [f64; 3] {
    let angle_at = |p: &Point2, q: &Point2, r: &Point2| {
        let (ux, uy) = (q.x - p.x, q.y - p.y);
        let (vx, vy) = (r.x - p.x, r.y - p.y);
        (ux * vy - uy * vx).abs().atan2(ux * vx + uy * vy)
    };
    [angle_at(a, b, c), angle_at(b, c, a), angle_at(c, a, b)]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObtuseAngle {
    pub element: usize,
    pub vertex: usize,
    pub angle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AngleCondition {
    pub holds: bool,
    pub offending: Vec<ObtuseAngle>,
}

/// Checks that every interior angle is at most a right angle (within 1e-12).
pub fn angle_condition(mesh: &Mesh) -> Result<AngleCondition, MeshError> {
    let angles = interior_angles(mesh)?;
    let mut offending = Vec::new();
    for (e, tri) in angles.iter().enumerate() {
        for (local, &angle) in tri.iter().enumerate() {
            if angle > PI / 2.0 + 1e-12 {
                offending.push(ObtuseAngle {
                    element: e,
                    vertex: mesh.elements[e].nodes[local],
                    angle,
                });
            }
        }
    }
    Ok(AngleCondition {
        holds: offending.is_empty(),
        offending,
    })
}

fn ccw_tri(nodes: &[Point2], a: usize, b: usize, c: usize) -> Element {
    if cross3(&nodes[a], &nodes[b], &nodes[c]) >= 0.0 {
        Element::tri(a, b, c)
    } else {
        Element::tri(a, c, b)
    }
}

/// Quadrilateral grid on the nodes `(xs[i], ys[j])`, node index `j * xs.len() + i`.
pub fn gen_tensor_product(xs: &[f64], ys: &[f64]) -> Result<Mesh, MeshError> {
    for (name, v) in [("xs", xs), ("ys", ys)] {
        if v.len() < 2 {
            return Err(MeshError::Parameter(format!(
                "{name} needs at least two values"
            )));
        }
        if v.windows(2).any(|w| w[1].is_nan() || w[1] <= w[0]) || v.iter().any(|t| !t.is_finite()) {
            return Err(MeshError::Parameter(format!(
                "{name} must be strictly increasing"
            )));
        }
    }
    let nx = xs.len();
    let nodes = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| Point2::new(x, y)))
        .collect();
    let mut elements = Vec::with_capacity((nx - 1) * (ys.len() - 1));
    for j in 0..ys.len() - 1 {
        for i in 0..nx - 1 {
            let v = j * nx + i;
            elements.push(Element::quad(v, v + 1, v + 1 + nx, v + nx));
        }
    }
    Mesh::new(MeshKind::Quadrilateral, nodes, elements)
}

/// Node layout of a polygon ring mesh with `k` sides.
///
/// Internal indices: `0` is the center, `1..=k` the inner ring (inner node `j`
/// at angle `2πj/k`), `k+1..=2k` the outer ring (outer node `j` at angle
/// `(2j-1)π/k`, between inner nodes `j-1` and `j`). External labels are the
/// internal indices plus one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RingLayout {
    pub k: usize,
}

impl RingLayout {
    pub fn center(&self) -> usize {
        0
    }

    pub fn inner(&self, j: usize) -> usize {
        1 + j % self.k
    }

    pub fn outer(&self, j: usize) -> usize {
        1 + self.k + j % self.k
    }

    /// Inner neighbours `(inner(j-1), inner(j))` of outer node `j`.
    pub fn outer_neighbours(&self, j: usize) -> (usize, usize) {
        (self.inner(j + self.k - 1), self.inner(j))
    }

    pub fn label(index: usize) -> usize {
        index + 1
    }

    pub fn index(label: usize) -> usize {
        label - 1
    }
}

/// Smallest ring radius giving a valid triangulation: the outer sides must clear the inner nodes.
pub fn ring_min_radius(k: usize) -> f64 {
    1.0 / (PI / k as f64).cos()
}

/// Regular `k`-gon ring mesh with inner radius 1 and outer radius `d`.
pub fn gen_polygon_ring(k: usize, d: f64) -> Result<Mesh, MeshError> {
    if k < 5 {
        return Err(MeshError::Parameter(format!(
            "ring meshes need k >= 5, got {k}"
        )));
    }
    if !d.is_finite() || d <= ring_min_radius(k) {
        return Err(MeshError::Parameter(format!(
            "outer radius {d} must exceed {:.12} for k = {k}",
            ring_min_radius(k)
        )));
    }
    let ring = RingLayout { k };
    let kf = k as f64;
    let mut nodes = vec![Point2::new(0.0, 0.0)];
    nodes.extend((0..k).map(|j| Point2::polar(1.0, 2.0 * PI * j as f64 / kf)));
    nodes.extend((0..k).map(|j| Point2::polar(d, (2.0 * j as f64 - 1.0) * PI / kf)));

    let mut elements = Vec::with_capacity(3 * k);
    for j in 0..k {
        elements.push(ccw_tri(
            &nodes,
            ring.center(),
            ring.inner(j),
            ring.inner(j + 1),
        ));
    }
    for j in 0..k {
        elements.push(ccw_tri(
            &nodes,
            ring.inner(j),
            ring.inner(j + 1),
            ring.outer(j + 1),
        ));
    }
    for j in 0..k {
        elements.push(ccw_tri(
            &nodes,
            ring.outer(j),
            ring.outer(j + 1),
            ring.inner(j),
        ));
    }
    Mesh::new_valid(MeshKind::Triangular, nodes, elements)
}

/// Hexagon ring with the outer triangle at angle 0 split at its boundary midpoint.
///
/// The new node has index 13 and is adjacent to the inner node at `(1, 0)`.
pub fn gen_hexagon_split(d: f64) -> Result<Mesh, MeshError> {
    let ring_mesh = gen_polygon_ring(6, d)?;
    let ring = RingLayout { k: 6 };
    let mut nodes = ring_mesh.nodes.clone();
    let (lo, hi, apex) = (ring.outer(0), ring.outer(1), ring.inner(0));
    let mid = nodes.len();
    nodes.push(Point2::new(d * 3f64.sqrt() / 2.0, 0.0));
    let mut elements: Vec<Element> = ring_mesh
        .elements
        .into_iter()
        .filter(|el| {
            let s: BTreeSet<_> = el.nodes.iter().copied().collect();
            s != BTreeSet::from([lo, hi, apex])
        })
        .collect();
    elements.push(ccw_tri(&nodes, lo, mid, apex));
    elements.push(ccw_tri(&nodes, mid, hi, apex));
    Mesh::new_valid(MeshKind::Triangular, nodes, elements)
}

/// Splits every triangle into four through its side midpoints.
pub fn refine_midpoints(mesh: &Mesh) -> Result<Mesh, MeshError> {
    if mesh.kind != MeshKind::Triangular {
        return Err(MeshError::WrongKind {
            expected: MeshKind::Triangular,
        });
    }
    let mut nodes = mesh.nodes.clone();
    let mut mids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut mid = |a: usize, b: usize, nodes: &mut Vec<Point2>| {
        *mids.entry((a.min(b), a.max(b))).or_insert_with(|| {
            nodes.push(nodes[a].midpoint(&nodes[b]));
            nodes.len() - 1
        })
    };
    let mut elements = Vec::with_capacity(4 * mesh.n_elements());
    for el in &mesh.elements {
        let (a, b, c) = (el.nodes[0], el.nodes[1], el.nodes[2]);
        let ab = mid(a, b, &mut nodes);
        let bc = mid(b, c, &mut nodes);
        let ca = mid(c, a, &mut nodes);
        elements.push(Element::tri(a, ab, ca));
        elements.push(Element::tri(ab, b, bc));
        elements.push(Element::tri(ca, bc, c));
        elements.push(Element::tri(ab, bc, ca));
    }
    Mesh::new_valid(MeshKind::Triangular, nodes, elements)
}

/// The 12 hexagon-ring triangles outside the inner hexagon, refined once.
///
/// Nodes `0..6` are the inner hexagon corners and `6..12` the outer corners;
/// the refinement midpoints follow.
pub fn gen_annulus(d: f64) -> Result<Mesh, MeshError> {
    let ring_mesh = gen_polygon_ring(6, d)?;
    let nodes: Vec<Point2> = ring_mesh.nodes[1..].to_vec();
    let elements = ring_mesh
        .elements
        .iter()
        .filter(|el| !el.nodes.contains(&0))
        .map(|el| Element {
            kind: el.kind,
            nodes: el.nodes.iter().map(|&v| v - 1).collect(),
        })
        .collect();
    let coarse = Mesh::new_valid(MeshKind::Triangular, nodes, elements)?;
    refine_midpoints(&coarse)
}

/// A triangulation of the unit inner hexagon matching the refined annulus
/// boundary: a center node, six corner triangles and a six-triangle fan over
/// the side midpoints. Node 0 is the center; nodes `1..7` the corners and
/// `7..13` the side midpoints (midpoint `j` between corners `j` and `j+1`).
pub fn inner_hexagon_patch() -> Mesh {
    let mut nodes = vec![Point2::new(0.0, 0.0)];
    nodes.extend((0..6).map(|j| Point2::polar(1.0, PI * j as f64 / 3.0)));
    for j in 0..6 {
        let m = nodes[1 + j].midpoint(&nodes[1 + (j + 1) % 6]);
        nodes.push(m);
    }
    let mut elements = Vec::new();
    for j in 0..6 {
        let prev_mid = 7 + (j + 5) % 6;
        elements.push(ccw_tri(&nodes, prev_mid, 1 + j, 7 + j));
    }
    for j in 0..6 {
        elements.push(ccw_tri(&nodes, 0, 7 + j, 7 + (j + 1) % 6));
    }
    Mesh::new(MeshKind::Triangular, nodes, elements).expect("patch indices are in range")
}

/// The anisotropic strip on `[0,6]x[0,3]`: three rows of eight triangles whose
/// horizontal sides have length 3 and apex height 0.5.
pub fn gen_aniso_strip() -> Mesh {
    let mut nodes = Vec::new();
    let mut index: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    let mut node = |x: f64, y: f64, nodes: &mut Vec<Point2>| {
        let key = ((x * 2.0).round() as i64, (y * 2.0).round() as i64);
        *index.entry(key).or_insert_with(|| {
            nodes.push(Point2::new(x, y));
            nodes.len() - 1
        })
    };
    let mut tris = Vec::new();
    for r in 0..3 {
        let y0 = r as f64;
        let (ym, y1) = (y0 + 0.5, y0 + 1.0);
        let bl = node(0.0, y0, &mut nodes);
        let bm = node(3.0, y0, &mut nodes);
        let br = node(6.0, y0, &mut nodes);
        let al = node(1.5, ym, &mut nodes);
        let ar = node(4.5, ym, &mut nodes);
        let tl = node(0.0, y1, &mut nodes);
        let tm = node(3.0, y1, &mut nodes);
        let tr = node(6.0, y1, &mut nodes);
        tris.extend([
            (bl, al, tl),
            (br, tr, ar),
            (bl, bm, al),
            (bm, br, ar),
            (al, bm, ar),
            (al, ar, tm),
            (tl, al, tm),
            (tm, ar, tr),
        ]);
    }
    let elements = tris
        .into_iter()
        .map(|(a, b, c)| ccw_tri(&nodes, a, b, c))
        .collect();
    Mesh::new(MeshKind::Triangular, nodes, elements).expect("strip indices are in range")
}

/// Moves node `i` to `x_i + s * directions[i]` and validates the result.
pub fn perturb(mesh: &Mesh, directions: &[[f64; 2]], s: f64) -> Result<Mesh, MeshError> {
    if directions.len() != mesh.n_nodes() {
        return Err(MeshError::Parameter(format!(
            "{} directions for {} nodes",
            directions.len(),
            mesh.n_nodes()
        )));
    }
    if s == 0.0 {
        return Ok(mesh.clone());
    }
    let nodes = mesh
        .nodes
        .iter()
        .zip(directions)
        .map(|(p, dir)| Point2::new(p.x + s * dir[0], p.y + s * dir[1]))
        .collect();
    Mesh::new_valid(mesh.kind, nodes, mesh.elements.clone())
}

/// Pairs each boundary node of `patch` with the host boundary node at the same position.
pub fn match_boundary(host: &Mesh, patch: &Mesh) -> Result<Vec<(usize, usize)>, MeshError> {
    let host_b = boundary_partition(host)?;
    let patch_b = boundary_partition(patch)?;
    let tol = COINCIDENT_TOL * host.diameter().max(patch.diameter());
    patch_b
        .boundary
        .iter()
        .map(|&p| {
            host_b
                .boundary
                .iter()
                .find(|&&h| host.nodes[h].dist(&patch.nodes[p]) <= tol)
                .map(|&h| (p, h))
                .ok_or_else(|| {
                    MeshError::Embed(format!("patch boundary node {p} has no host counterpart"))
                })
        })
        .collect()
}

/// Glues `patch` into `host`, identifying `shared` pairs `(patch node, host node)`.
///
/// Host nodes keep their indices; unshared patch nodes are appended in order.
pub fn embed(host: &Mesh, patch: &Mesh, shared: &[(usize, usize)]) -> Result<Mesh, MeshError> {
    if patch.n_nodes() == 0 && patch.n_elements() == 0 {
        return Ok(host.clone());
    }
    if patch.kind != host.kind {
        return Err(MeshError::Embed(
            "host and patch element kinds differ".into(),
        ));
    }
    let host_b = boundary_partition(host)?;
    let patch_b = boundary_partition(patch)?;
    let tol = COINCIDENT_TOL * host.diameter().max(patch.diameter());

    let mut map: Vec<Option<usize>> = vec![None; patch.n_nodes()];
    let mut used_host = BTreeSet::new();
    for &(p, h) in shared {
        if p >= patch.n_nodes() || h >= host.n_nodes() {
            return Err(MeshError::Embed(format!("pair ({p}, {h}) is out of range")));
        }
        if !patch_b.is_boundary(p) || !host_b.is_boundary(h) {
            return Err(MeshError::Embed(format!(
                "pair ({p}, {h}) is not boundary-to-boundary"
            )));
        }
        if map[p].is_some() || !used_host.insert(h) {
            return Err(MeshError::Embed(format!(
                "pair ({p}, {h}) is not one-to-one"
            )));
        }
        let dist = host.nodes[h].dist(&patch.nodes[p]);
        if dist > tol {
            return Err(MeshError::Embed(format!(
                "coordinate mismatch {dist:e} between patch {p} and host {h}"
            )));
        }
        map[p] = Some(h);
    }
    if let Some(&p) = patch_b.boundary.iter().find(|&&p| map[p].is_none()) {
        return Err(MeshError::Embed(format!(
            "patch boundary node {p} is not matched"
        )));
    }

    // A side shared by both meshes must be traversed in opposite directions.
    let mut host_directed = BTreeSet::new();
    for el in &host.elements {
        host_directed.extend(el.sides());
    }
    for el in &patch.elements {
        for (a, b) in el.sides() {
            if let (Some(ha), Some(hb)) = (map[a], map[b]) {
                if host_directed.contains(&(ha, hb)) {
                    return Err(MeshError::Embed(format!(
                        "orientation conflict on shared side ({ha}, {hb})"
                    )));
                }
            }
        }
    }

    let mut nodes = host.nodes.clone();
    let index: Vec<usize> = (0..patch.n_nodes())
        .map(|p| {
            map[p].unwrap_or_else(|| {
                nodes.push(patch.nodes[p]);
                nodes.len() - 1
            })
        })
        .collect();
    let mut elements = host.elements.clone();
    elements.extend(patch.elements.iter().map(|el| Element {
        kind: el.kind,
        nodes: el.nodes.iter().map(|&v| index[v]).collect(),
    }));
    Mesh::new_valid(host.kind, nodes, elements)
}
