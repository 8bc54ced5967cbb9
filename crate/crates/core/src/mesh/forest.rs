//! Append-only bisection forest shared by every mesh derived from one
//! initial triangulation.
//!
//! Each node stores its vertices as `[newest, a, b]`, counterclockwise, with
//! the refinement edge `(a, b)` opposite the newest vertex. Bisecting a node
//! is deterministic, so two meshes that bisect the same node share its
//! children and the midpoint vertex.

use crate::geometry::{midpoint, Point};
use std::collections::HashMap;

pub type NodeId = usize;
pub type VertexId = usize;

#[derive(Clone, Debug)]
pub struct Node {
    pub verts: [VertexId; 3],
    pub parent: Option<NodeId>,
    pub children: Option<[NodeId; 2]>,
    pub level: u32,
}

#[derive(Clone, Debug, Default)]
pub struct Forest {
    pub vertices: Vec<Point>,
    pub nodes: Vec<Node>,
    pub num_roots: usize,
    midpoints: HashMap<(VertexId, VertexId), VertexId>,
}

pub fn edge_key(a: VertexId, b: VertexId) -> (VertexId, VertexId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Forest {
    pub fn new(vertices: Vec<Point>, roots: Vec<[VertexId; 3]>) -> Self {
        let num_roots = roots.len();
        let nodes = roots.into_iter().map(|verts| Node { verts, parent: None, children: None, level: 0 }).collect();
        Forest { vertices, nodes, num_roots, midpoints: HashMap::new() }
    }

    /// Rebuilds a forest from vertices and `(verts, parent)` node records.
    /// Children must follow their parent, in bisection order.
    pub fn from_records(vertices: Vec<Point>, records: &[([VertexId; 3], Option<NodeId>)]) -> Option<Self> {
        let mut nodes: Vec<Node> = Vec::with_capacity(records.len());
        let mut midpoints = HashMap::new();
        let mut num_roots = 0;
        for (id, &(verts, parent)) in records.iter().enumerate() {
            if verts.iter().any(|&v| v >= vertices.len()) {
                return None;
            }
            let level = match parent {
                None => {
                    if id != num_roots {
                        return None;
                    }
                    num_roots += 1;
                    0
                }
                Some(p) => {
                    let pn = nodes.get_mut(p)?;
                    match &mut pn.children {
                        None => pn.children = Some([id, usize::MAX]),
                        Some(c) if c[1] == usize::MAX => c[1] = id,
                        Some(_) => return None,
                    }
                    midpoints.insert(edge_key(pn.verts[1], pn.verts[2]), verts[0]);
                    pn.level + 1
                }
            };
            nodes.push(Node { verts, parent, children: None, level });
        }
        if nodes.iter().any(|n| matches!(n.children, Some([_, usize::MAX]))) {
            return None;
        }
        Some(Forest { vertices, nodes, num_roots, midpoints })
    }

    pub fn refinement_edge(&self, t: NodeId) -> (VertexId, VertexId) {
        let v = self.nodes[t].verts;
        edge_key(v[1], v[2])
    }

    pub fn midpoint_of(&self, a: VertexId, b: VertexId) -> Option<VertexId> {
        self.midpoints.get(&edge_key(a, b)).copied()
    }

    fn midpoint_vertex(&mut self, a: VertexId, b: VertexId) -> VertexId {
        let key = edge_key(a, b);
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let m = self.vertices.len();
        self.vertices.push(midpoint(self.vertices[a], self.vertices[b]));
        self.midpoints.insert(key, m);
        m
    }

    /// Children of `t`, created on first request.
    pub fn bisect(&mut self, t: NodeId) -> [NodeId; 2] {
        if let Some(c) = self.nodes[t].children {
            return c;
        }
        let [v0, v1, v2] = self.nodes[t].verts;
        let m = self.midpoint_vertex(v1, v2);
        let level = self.nodes[t].level + 1;
        let c1 = self.nodes.len();
        self.nodes.push(Node { verts: [m, v0, v1], parent: Some(t), children: None, level });
        let c2 = self.nodes.len();
        self.nodes.push(Node { verts: [m, v2, v0], parent: Some(t), children: None, level });
        self.nodes[t].children = Some([c1, c2]);
        [c1, c2]
    }

    pub fn is_ancestor_or_self(&self, anc: NodeId, mut node: NodeId) -> bool {
        loop {
            if node == anc {
                return true;
            }
            match self.nodes[node].parent {
                Some(p) => node = p,
                None => return false,
            }
        }
    }

    pub fn coords(&self, t: NodeId) -> [Point; 3] {
        let v = self.nodes[t].verts;
        [self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]]]
    }
}
