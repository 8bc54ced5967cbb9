//! Conforming triangular meshes over rectangles with newest-vertex
//! bisection, forest-based coarsening and overlay (union) meshes.
//!
//! A [`Mesh`] is an immutable leaf set over a shared [`Forest`]. Leaf
//! geometry and the edge skeleton are cached at construction so element and
//! edge loops never touch the forest lock.

pub mod forest;
pub mod io;
pub mod locate;

use crate::error::{Error, Result};
use crate::geometry::{dist, signed_area2, Point, Rect};
use forest::{edge_key, Forest, NodeId, VertexId};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, RwLock};

pub use locate::PointLocator;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// Boundary classification of the four sides of the rectangular domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryTags {
    pub left: BoundaryKind,
    pub right: BoundaryKind,
    pub bottom: BoundaryKind,
    pub top: BoundaryKind,
}

impl Default for BoundaryTags {
    fn default() -> Self {
        BoundaryTags::all(BoundaryKind::Dirichlet)
    }
}

impl BoundaryTags {
    pub fn all(kind: BoundaryKind) -> Self {
        BoundaryTags { left: kind, right: kind, bottom: kind, top: kind }
    }

    /// Kind of a boundary edge, decided from its midpoint.
    pub fn kind_at(&self, domain: &Rect, p: Point) -> BoundaryKind {
        let tol = 1e-10 * domain.diameter();
        if (p[0] - domain.x0).abs() <= tol {
            self.left
        } else if (p[0] - domain.x1).abs() <= tol {
            self.right
        } else if (p[1] - domain.y0).abs() <= tol {
            self.bottom
        } else {
            self.top
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Interior,
    Dirichlet,
    Neumann,
}

impl EdgeKind {
    pub fn is_boundary(self) -> bool {
        self != EdgeKind::Interior
    }
}

/// Geometry of one leaf triangle. Local vertex 0 is the newest vertex.
#[derive(Clone, Debug)]
pub struct Cell {
    pub node: NodeId,
    pub verts: [VertexId; 3],
    pub x: [Point; 3],
    pub area: f64,
    /// Longest edge length, used as `h_K`.
    pub diameter: f64,
    pub level: u32,
    /// Columns are `x1 - x0` and `x2 - x0`.
    pub jac: [[f64; 2]; 2],
    pub jinv: [[f64; 2]; 2],
}

impl Cell {
    pub fn centroid(&self) -> Point {
        [(self.x[0][0] + self.x[1][0] + self.x[2][0]) / 3.0, (self.x[0][1] + self.x[1][1] + self.x[2][1]) / 3.0]
    }

    /// Reference coordinates to physical coordinates.
    pub fn map(&self, r: [f64; 2]) -> Point {
        let j = &self.jac;
        [self.x[0][0] + j[0][0] * r[0] + j[0][1] * r[1], self.x[0][1] + j[1][0] * r[0] + j[1][1] * r[1]]
    }

    /// Physical coordinates to reference coordinates.
    pub fn inverse_map(&self, p: Point) -> [f64; 2] {
        let d = [p[0] - self.x[0][0], p[1] - self.x[0][1]];
        let ji = &self.jinv;
        [ji[0][0] * d[0] + ji[0][1] * d[1], ji[1][0] * d[0] + ji[1][1] * d[1]]
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        let r = self.inverse_map(p);
        r[0] >= -tol && r[1] >= -tol && r[0] + r[1] <= 1.0 + tol
    }

    fn from_coords(node: NodeId, verts: [VertexId; 3], x: [Point; 3], level: u32) -> Cell {
        let jac = [[x[1][0] - x[0][0], x[2][0] - x[0][0]], [x[1][1] - x[0][1], x[2][1] - x[0][1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let jinv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        let diameter = dist(x[0], x[1]).max(dist(x[1], x[2])).max(dist(x[2], x[0]));
        Cell { node, verts, x, area: 0.5 * det, diameter, level, jac, jinv }
    }
}

/// One edge of the leaf skeleton.
///
/// `x[0] -> x[1]` parametrises the edge by `s in [0, 1]`. For interior
/// edges `left < right` and `normal` points from `left` into `right`; for
/// boundary edges it is the outward normal.
#[derive(Clone, Debug)]
pub struct Edge {
    pub verts: [VertexId; 2],
    pub x: [Point; 2],
    pub kind: EdgeKind,
    pub left: usize,
    pub right: Option<usize>,
    /// Local edge index (opposite local vertex) in `left` and `right`.
    pub left_local: u8,
    pub right_local: u8,
    /// Whether `x[0]` is the second endpoint of the local edge in that cell.
    pub left_flip: bool,
    pub right_flip: bool,
    pub normal: Point,
    pub length: f64,
}

impl Edge {
    pub fn point(&self, s: f64) -> Point {
        [self.x[0][0] + s * (self.x[1][0] - self.x[0][0]), self.x[0][1] + s * (self.x[1][1] - self.x[0][1])]
    }
}

/// Reference coordinates of the point at parameter `s` along local edge
/// `local` (opposite local vertex `local`), traversed from local vertex
/// `local+1` to `local+2`, or backwards when `flip`.
pub fn reference_edge_point(local: u8, flip: bool, s: f64) -> [f64; 2] {
    const R: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let a = R[(local as usize + 1) % 3];
    let b = R[(local as usize + 2) % 3];
    let s = if flip { 1.0 - s } else { s };
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

#[derive(Clone, Debug)]
pub struct Mesh {
    forest: Arc<RwLock<Forest>>,
    domain: Rect,
    boundary: BoundaryTags,
    cells: Vec<Cell>,
    edges: Vec<Edge>,
    cell_edges: Vec<[usize; 3]>,
    leaf_index: HashMap<NodeId, usize>,
    num_vertices: usize,
}

impl Mesh {
    /// Uniform `nx x ny` grid of rectangles, each split by the same diagonal.
    pub fn build_structured(domain: Rect, nx: usize, ny: usize) -> Result<Mesh> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!("subdivision counts must be positive, got {nx} x {ny}")));
        }
        if !(domain.x1 > domain.x0 && domain.y1 > domain.y0) {
            return Err(Error::InvalidArgument("degenerate domain".into()));
        }
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                let x = domain.x0 + (domain.x1 - domain.x0) * i as f64 / nx as f64;
                let y = domain.y0 + (domain.y1 - domain.y0) * j as f64 / ny as f64;
                vertices.push([x, y]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut tris = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (p00, p10, p11, p01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                tris.push([p00, p10, p11]);
                tris.push([p00, p11, p01]);
            }
        }
        Mesh::from_triangles(domain, vertices, &tris)
    }

    /// Builds a level-0 mesh from an arbitrary conforming triangulation.
    /// The refinement edge of each triangle is its longest edge, ties broken
    /// by the smallest opposite-vertex id.
    pub fn from_triangles(domain: Rect, vertices: Vec<Point>, triangles: &[[VertexId; 3]]) -> Result<Mesh> {
        let mut roots = Vec::with_capacity(triangles.len());
        for t in triangles {
            let mut t = *t;
            if signed_area2(vertices[t[0]], vertices[t[1]], vertices[t[2]]) < 0.0 {
                t.swap(1, 2);
            }
            // Edge opposite local vertex i joins (i+1, i+2).
            let len = |i: usize| dist(vertices[t[(i + 1) % 3]], vertices[t[(i + 2) % 3]]);
            let lmax = (0..3).map(len).fold(0.0, f64::max);
            let best = (0..3).filter(|&i| len(i) >= lmax * (1.0 - 1e-12)).min_by_key(|&i| t[i]).unwrap();
            roots.push([t[best], t[(best + 1) % 3], t[(best + 2) % 3]]);
        }
        let n = roots.len();
        let forest = Forest::new(vertices, roots);
        let forest = Arc::new(RwLock::new(forest));
        Ok(Mesh::from_leaves(forest, domain, BoundaryTags::default(), (0..n).collect()))
    }

    /// Same leaves with a different boundary classification.
    pub fn with_boundary(&self, boundary: BoundaryTags) -> Mesh {
        let mut m = self.clone();
        m.boundary = boundary;
        for e in &mut m.edges {
            if e.kind.is_boundary() {
                e.kind = match boundary.kind_at(&m.domain, crate::geometry::midpoint(e.x[0], e.x[1])) {
                    BoundaryKind::Dirichlet => EdgeKind::Dirichlet,
                    BoundaryKind::Neumann => EdgeKind::Neumann,
                };
            }
        }
        m
    }

    pub(crate) fn from_leaves(
        forest: Arc<RwLock<Forest>>,
        domain: Rect,
        boundary: BoundaryTags,
        leaves: Vec<NodeId>,
    ) -> Mesh {
        let f = forest.read().unwrap();
        let leafset: HashSet<NodeId> = leaves.iter().copied().collect();
        // Depth-first order keeps spatially close cells close in the numbering.
        let mut ordered = Vec::with_capacity(leaves.len());
        let mut stack: Vec<NodeId> = (0..f.num_roots).rev().collect();
        while let Some(t) = stack.pop() {
            if leafset.contains(&t) {
                ordered.push(t);
            } else if let Some([c1, c2]) = f.nodes[t].children {
                stack.push(c2);
                stack.push(c1);
            }
        }
        debug_assert_eq!(ordered.len(), leaves.len());
        let cells: Vec<Cell> =
            ordered.iter().map(|&t| Cell::from_coords(t, f.nodes[t].verts, f.coords(t), f.nodes[t].level)).collect();
        drop(f);

        let mut edges: Vec<Edge> = Vec::with_capacity(cells.len() * 3 / 2 + 4);
        let mut cell_edges = vec![[usize::MAX; 3]; cells.len()];
        let mut lookup: HashMap<(VertexId, VertexId), usize> = HashMap::with_capacity(cells.len() * 2);
        let mut used = HashSet::with_capacity(cells.len());
        for (ci, c) in cells.iter().enumerate() {
            for &v in &c.verts {
                used.insert(v);
            }
            for local in 0..3u8 {
                let a = c.verts[(local as usize + 1) % 3];
                let b = c.verts[(local as usize + 2) % 3];
                let key = edge_key(a, b);
                if let Some(&ei) = lookup.get(&key) {
                    let e = &mut edges[ei];
                    e.right = Some(ci);
                    e.right_local = local;
                    e.right_flip = e.verts[0] != a;
                    e.kind = EdgeKind::Interior;
                    cell_edges[ci][local as usize] = ei;
                } else {
                    let xa = c.x[(local as usize + 1) % 3];
                    let xb = c.x[(local as usize + 2) % 3];
                    let length = dist(xa, xb);
                    let normal = [(xb[1] - xa[1]) / length, -(xb[0] - xa[0]) / length];
                    let ei = edges.len();
                    edges.push(Edge {
                        verts: [a, b],
                        x: [xa, xb],
                        kind: EdgeKind::Dirichlet,
                        left: ci,
                        right: None,
                        left_local: local,
                        right_local: 0,
                        left_flip: false,
                        right_flip: false,
                        normal,
                        length,
                    });
                    lookup.insert(key, ei);
                    cell_edges[ci][local as usize] = ei;
                }
            }
        }
        let leaf_index = cells.iter().enumerate().map(|(i, c)| (c.node, i)).collect();
        let mesh = Mesh { forest, domain, boundary, cells, edges, cell_edges, leaf_index, num_vertices: used.len() };
        mesh.with_boundary(boundary)
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn boundary(&self) -> BoundaryTags {
        self.boundary
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &Cell {
        &self.cells[i]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn cell_edges(&self, i: usize) -> [usize; 3] {
        self.cell_edges[i]
    }

    pub fn forest(&self) -> &Arc<RwLock<Forest>> {
        &self.forest
    }

    pub fn same_forest(&self, other: &Mesh) -> bool {
        Arc::ptr_eq(&self.forest, &other.forest)
    }

    /// Leaf index of the forest node, if it is a leaf of this mesh.
    pub fn leaf_of_node(&self, node: NodeId) -> Option<usize> {
        self.leaf_index.get(&node).copied()
    }

    /// `(h_e, n_e, left, right)` for a skeleton edge.
    pub fn edge_geometry(&self, edge: usize) -> Result<(f64, Point, usize, Option<usize>)> {
        let e = self.edges.get(edge).ok_or(Error::StaleEdge(edge))?;
        Ok((e.length, e.normal, e.left, e.right))
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    pub fn max_level(&self) -> u32 {
        self.cells.iter().map(|c| c.level).max().unwrap_or(0)
    }

    pub fn min_angle(&self) -> f64 {
        self.cells.iter().map(|c| cell_min_angle(&c.x)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_diameter(&self) -> f64 {
        self.cells.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }

    /// Bisects every marked leaf at least once, closing hanging nodes by
    /// recursive bisection of the neighbours across their refinement edges.
    pub fn refine(&self, marked: &[usize]) -> Result<Mesh> {
        if let Some(&bad) = marked.iter().find(|&&i| i >= self.cells.len()) {
            return Err(Error::NotALeaf(bad));
        }
        if marked.is_empty() {
            return Ok(self.clone());
        }
        let mut f = self.forest.write().unwrap();
        let mut work = LeafWork::new(&self.cells);
        for &i in marked {
            work.refine_node(&mut f, self.cells[i].node);
        }
        drop(f);
        Ok(Mesh::from_leaves(self.forest.clone(), self.domain, self.boundary, work.leaves()))
    }

    /// Bisects every leaf `passes` times. Two passes halve `h`.
    pub fn refine_uniform(&self, passes: usize) -> Result<Mesh> {
        let mut m = self.clone();
        for _ in 0..passes {
            let all: Vec<usize> = (0..m.num_cells()).collect();
            m = m.refine(&all)?;
        }
        Ok(m)
    }

    /// Merges sibling pairs around removable newest vertices. A vertex is
    /// removable when every leaf touching it is a marked child of a parent
    /// bisected at that vertex (two leaves on the boundary, four inside).
    pub fn coarsen(&self, marked: &[usize]) -> Mesh {
        let marked: HashSet<usize> = marked.iter().copied().filter(|&i| i < self.cells.len()).collect();
        if marked.is_empty() {
            return self.clone();
        }
        let f = self.forest.read().unwrap();
        let mut around: BTreeMap<VertexId, Vec<usize>> = BTreeMap::new();
        for &i in &marked {
            let c = &self.cells[i];
            if c.level > 0 {
                around.entry(c.verts[0]).or_default();
            }
        }
        for (ci, c) in self.cells.iter().enumerate() {
            for v in c.verts {
                if let Some(list) = around.get_mut(&v) {
                    list.push(ci);
                }
            }
        }
        let mut remove: HashSet<NodeId> = HashSet::new();
        let mut add: Vec<NodeId> = Vec::new();
        for (&v, list) in &around {
            if list.len() != 2 && list.len() != 4 {
                continue;
            }
            let ok = list.iter().all(|&ci| {
                let c = &self.cells[ci];
                c.level > 0 && c.verts[0] == v && marked.contains(&ci)
            });
            if !ok {
                continue;
            }
            let mut parents: Vec<NodeId> =
                list.iter().map(|&ci| f.nodes[self.cells[ci].node].parent.unwrap()).collect();
            parents.sort_unstable();
            parents.dedup();
            if parents.len() * 2 != list.len() {
                continue;
            }
            let siblings_present = parents.iter().all(|&p| {
                let [c1, c2] = f.nodes[p].children.unwrap();
                self.leaf_index.contains_key(&c1) && self.leaf_index.contains_key(&c2)
            });
            if !siblings_present {
                continue;
            }
            for &ci in list {
                remove.insert(self.cells[ci].node);
            }
            add.extend(parents);
        }
        drop(f);
        if add.is_empty() {
            return self.clone();
        }
        let mut leaves: Vec<NodeId> = self.cells.iter().map(|c| c.node).filter(|n| !remove.contains(n)).collect();
        leaves.extend(add);
        Mesh::from_leaves(self.forest.clone(), self.domain, self.boundary, leaves)
    }

    /// Finest common refinement of two meshes over the same forest.
    pub fn union(&self, other: &Mesh) -> Result<Mesh> {
        if !self.same_forest(other) {
            return Err(Error::IncompatibleForest);
        }
        let f = self.forest.read().unwrap();
        let mut candidates: HashSet<NodeId> = self.leaf_index.keys().copied().collect();
        candidates.extend(other.leaf_index.keys().copied());
        let mut ancestors: HashSet<NodeId> = HashSet::new();
        for &n in &candidates {
            let mut p = f.nodes[n].parent;
            while let Some(q) = p {
                if !ancestors.insert(q) {
                    break;
                }
                p = f.nodes[q].parent;
            }
        }
        drop(f);
        let leaves: Vec<NodeId> = candidates.into_iter().filter(|n| !ancestors.contains(n)).collect();
        Ok(Mesh::from_leaves(self.forest.clone(), self.domain, self.boundary, leaves))
    }

    /// For every leaf of `self`, the leaf of `coarser` containing it.
    /// Fails if some leaf of `self` is not contained in a single leaf of `coarser`.
    pub fn parents_in(&self, coarser: &Mesh) -> Result<Vec<usize>> {
        if !self.same_forest(coarser) {
            return Err(Error::IncompatibleForest);
        }
        let f = self.forest.read().unwrap();
        self.cells
            .iter()
            .map(|c| {
                let mut n = Some(c.node);
                while let Some(q) = n {
                    if let Some(&i) = coarser.leaf_index.get(&q) {
                        return Ok(i);
                    }
                    n = f.nodes[q].parent;
                }
                Err(Error::IncompatibleForest)
            })
            .collect()
    }

    /// Same leaf set (as forest nodes).
    pub fn same_leaves(&self, other: &Mesh) -> bool {
        self.same_forest(other)
            && self.cells.len() == other.cells.len()
            && self.cells.iter().all(|c| other.leaf_index.contains_key(&c.node))
    }

    /// Vertices lying strictly inside some skeleton edge (brute-force scan).
    pub fn hanging_nodes(&self) -> Vec<VertexId> {
        let f = self.forest.read().unwrap();
        let mut used: Vec<VertexId> = self.cells.iter().flat_map(|c| c.verts).collect();
        used.sort_unstable();
        used.dedup();
        let mut out = Vec::new();
        for e in &self.edges {
            let (a, b) = (e.x[0], e.x[1]);
            for &v in &used {
                if v == e.verts[0] || v == e.verts[1] {
                    continue;
                }
                let p = f.vertices[v];
                let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
                if cross.abs() > 1e-12 * e.length * e.length {
                    continue;
                }
                let t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (e.length * e.length);
                if t > 1e-12 && t < 1.0 - 1e-12 {
                    out.push(v);
                }
            }
        }
        out
    }

    /// Coordinates of all leaf vertices, indexed by forest vertex id.
    pub fn vertex_coords(&self) -> Vec<Point> {
        self.forest.read().unwrap().vertices.clone()
    }
}

fn cell_min_angle(x: &[Point; 3]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..3 {
        let a = x[i];
        let b = x[(i + 1) % 3];
        let c = x[(i + 2) % 3];
        let u = [b[0] - a[0], b[1] - a[1]];
        let v = [c[0] - a[0], c[1] - a[1]];
        let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
        m = m.min(cos.clamp(-1.0, 1.0).acos());
    }
    m
}

/// Mutable leaf set with an edge map, used while refining.
struct LeafWork {
    leaves: HashSet<NodeId>,
    order: Vec<NodeId>,
    edges: HashMap<(VertexId, VertexId), [Option<NodeId>; 2]>,
}

impl LeafWork {
    fn new(cells: &[Cell]) -> Self {
        let mut w = LeafWork {
            leaves: HashSet::with_capacity(cells.len() * 2),
            order: Vec::with_capacity(cells.len() * 2),
            edges: HashMap::with_capacity(cells.len() * 3),
        };
        for c in cells {
            w.insert(c.node, c.verts);
        }
        w
    }

    fn insert(&mut self, t: NodeId, v: [VertexId; 3]) {
        self.leaves.insert(t);
        self.order.push(t);
        for i in 0..3 {
            let slot = self.edges.entry(edge_key(v[(i + 1) % 3], v[(i + 2) % 3])).or_insert([None, None]);
            if slot[0].is_none() {
                slot[0] = Some(t);
            } else {
                slot[1] = Some(t);
            }
        }
    }

    fn remove(&mut self, t: NodeId, v: [VertexId; 3]) {
        self.leaves.remove(&t);
        for i in 0..3 {
            let key = edge_key(v[(i + 1) % 3], v[(i + 2) % 3]);
            if let Some(slot) = self.edges.get_mut(&key) {
                for s in slot.iter_mut() {
                    if *s == Some(t) {
                        *s = None;
                    }
                }
                if slot[0].is_none() && slot[1].is_none() {
                    self.edges.remove(&key);
                } else if slot[0].is_none() {
                    slot.swap(0, 1);
                }
            }
        }
    }

    fn neighbour(&self, t: NodeId, key: (VertexId, VertexId)) -> Option<NodeId> {
        self.edges.get(&key).and_then(|s| s.iter().flatten().copied().find(|&n| n != t))
    }

    fn bisect(&mut self, f: &mut Forest, t: NodeId) {
        let v = f.nodes[t].verts;
        let [c1, c2] = f.bisect(t);
        self.remove(t, v);
        let (v1, v2) = (f.nodes[c1].verts, f.nodes[c2].verts);
        self.insert(c1, v1);
        self.insert(c2, v2);
    }

    fn refine_node(&mut self, f: &mut Forest, t: NodeId) {
        loop {
            if !self.leaves.contains(&t) {
                return;
            }
            let key = f.refinement_edge(t);
            match self.neighbour(t, key) {
                None => {
                    self.bisect(f, t);
                    return;
                }
                Some(n) if f.refinement_edge(n) == key => {
                    self.bisect(f, t);
                    self.bisect(f, n);
                    return;
                }
                Some(n) => self.refine_node(f, n),
            }
        }
    }

    fn leaves(&self) -> Vec<NodeId> {
        self.order.iter().copied().filter(|t| self.leaves.contains(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Mesh {
        Mesh::build_structured(Rect::unit(), n, n).unwrap()
    }

    fn euler(m: &Mesh) -> i64 {
        m.num_vertices() as i64 - m.num_edges() as i64 + m.num_cells() as i64
    }

    #[test]
    fn structured_counts() {
        let m = unit(1);
        assert_eq!((m.num_cells(), m.num_vertices(), m.num_edges()), (2, 4, 5));
        assert_eq!(unit(2).num_cells(), 8);
        let m = Mesh::build_structured(Rect::new(0.0, 3.0, 0.0, 2.0), 6, 4).unwrap();
        assert_eq!(m.num_cells(), 48);
        // Oracle: direct enumeration of grid entities.
        let (nx, ny) = (6i64, 4i64);
        let v = (nx + 1) * (ny + 1);
        let e = nx * (ny + 1) + ny * (nx + 1) + nx * ny;
        assert_eq!(m.num_vertices() as i64, v);
        assert_eq!(m.num_edges() as i64, e);
        assert_eq!(euler(&m), 1);
    }

    #[test]
    fn rejects_zero_subdivisions() {
        assert!(Mesh::build_structured(Rect::unit(), 0, 3).is_err());
    }

    #[test]
    fn cells_are_counterclockwise() {
        let m = unit(3);
        assert!(m.cells().iter().all(|c| c.area > 0.0));
    }

    #[test]
    fn empty_marking_is_identity() {
        let m = unit(2);
        let r = m.refine(&[]).unwrap();
        assert!(r.same_leaves(&m));
    }

    #[test]
    fn refining_both_triangles_of_square() {
        let m = unit(1);
        let r = m.refine(&[0, 1]).unwrap();
        assert_eq!(r.num_cells(), 4);
        assert!(r.hanging_nodes().is_empty());
        // Both halves bisect the shared diagonal at the centre.
        let coords = r.vertex_coords();
        let centre = r.cells().iter().all(|c| {
            let p = coords[c.verts[0]];
            (p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15
        });
        assert!(centre);
    }

    #[test]
    fn closure_bisects_the_neighbour() {
        let m = unit(1);
        let r = m.refine(&[0]).unwrap();
        assert_eq!(r.num_cells(), 4);
        assert!(r.hanging_nodes().is_empty());
        assert_eq!(euler(&r), 1);
    }

    #[test]
    fn non_leaf_mark_is_rejected() {
        assert!(matches!(unit(1).refine(&[7]), Err(Error::NotALeaf(7))));
    }

    #[test]
    fn coarsen_restores_the_square() {
        let m = unit(1);
        let r = m.refine(&[0, 1]).unwrap();
        let c = r.coarsen(&[0, 1, 2, 3]);
        assert!(c.same_leaves(&m));
    }

    #[test]
    fn coarsen_never_goes_below_level_zero() {
        let m = unit(2);
        let c = m.coarsen(&(0..m.num_cells()).collect::<Vec<_>>());
        assert!(c.same_leaves(&m));
    }

    #[test]
    fn coarsen_needs_both_siblings() {
        let m = unit(1);
        let r = m.refine(&[0, 1]).unwrap();
        let c = r.coarsen(&[0]);
        assert!(c.same_leaves(&r));
    }

    #[test]
    fn union_merges_independent_refinements() {
        let m = unit(2);
        let a = m.refine(&[0]).unwrap();
        let b = m.refine(&[5]).unwrap();
        let u = a.union(&b).unwrap();
        assert!(u.hanging_nodes().is_empty());
        assert!(a.parents_in(&m).is_ok());
        // Every leaf of a and of b is an ancestor-or-self of some union leaf.
        for mesh in [&a, &b] {
            let p = u.parents_in(mesh).unwrap();
            assert_eq!(p.len(), u.num_cells());
        }
        assert!(u.num_cells() > a.num_cells().max(b.num_cells()));
        assert!(u.union(&u).unwrap().same_leaves(&u));
        let full = m.refine_uniform(1).unwrap();
        assert!(full.union(&m).unwrap().same_leaves(&full));
    }

    #[test]
    fn union_rejects_foreign_forest() {
        assert!(matches!(unit(1).union(&unit(1)), Err(Error::IncompatibleForest)));
    }

    #[test]
    fn edge_geometry_examples() {
        let m = unit(1);
        let mut saw_diag = false;
        for (i, e) in m.edges().iter().enumerate() {
            let (h, n, left, right) = m.edge_geometry(i).unwrap();
            assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-15);
            if e.kind == EdgeKind::Interior {
                assert!((h - 2f64.sqrt()).abs() < 1e-15);
                assert!(left < right.unwrap());
                saw_diag = true;
                // normal points from left into right
                let cl = m.cell(left).centroid();
                let cr = m.cell(right.unwrap()).centroid();
                assert!((cr[0] - cl[0]) * n[0] + (cr[1] - cl[1]) * n[1] > 0.0);
            } else {
                assert!((h - 1.0).abs() < 1e-15);
                assert!(right.is_none());
                let mid = crate::geometry::midpoint(e.x[0], e.x[1]);
                let c = m.cell(left).centroid();
                assert!((mid[0] - c[0]) * n[0] + (mid[1] - c[1]) * n[1] > 0.0);
                if (e.x[0][1] - e.x[1][1]).abs() < 1e-15 {
                    assert!(n[0].abs() < 1e-15 && (n[1].abs() - 1.0).abs() < 1e-15);
                }
            }
        }
        assert!(saw_diag);
        assert!(matches!(m.edge_geometry(99), Err(Error::StaleEdge(99))));
    }

    #[test]
    fn boundary_tags_follow_sides() {
        let tags = BoundaryTags {
            left: BoundaryKind::Dirichlet,
            right: BoundaryKind::Neumann,
            bottom: BoundaryKind::Neumann,
            top: BoundaryKind::Neumann,
        };
        let m = Mesh::build_structured(Rect::new(0.0, 3.0, 0.0, 2.0), 3, 2).unwrap().with_boundary(tags);
        for e in m.edges() {
            if e.kind == EdgeKind::Dirichlet {
                assert!(e.x[0][0].abs() < 1e-14 && e.x[1][0].abs() < 1e-14);
            }
        }
        let r = m.refine(&[0]).unwrap();
        assert_eq!(r.boundary(), tags);
        let nd = r.edges().iter().filter(|e| e.kind == EdgeKind::Dirichlet).count();
        assert!(nd >= 2);
    }

    #[test]
    fn edge_reference_points_match_physical_points() {
        let m = unit(2).refine(&[1, 4]).unwrap();
        for e in m.edges() {
            for s in [0.0, 0.3, 1.0] {
                let p = e.point(s);
                let cl = m.cell(e.left);
                let q = cl.map(reference_edge_point(e.left_local, e.left_flip, s));
                assert!(crate::geometry::dist(p, q) < 1e-14);
                if let Some(r) = e.right {
                    let cr = m.cell(r);
                    let q = cr.map(reference_edge_point(e.right_local, e.right_flip, s));
                    assert!(crate::geometry::dist(p, q) < 1e-14);
                }
            }
        }
    }
}
