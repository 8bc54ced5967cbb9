//! Plain-text mesh serialization: domain, boundary tags, vertices, the full
//! bisection forest and the leaf set.

use super::forest::{Forest, NodeId};
use super::{BoundaryKind, BoundaryTags, Mesh};
use crate::error::{Error, Result};
use crate::geometry::Rect;
use std::fmt::Write as _;
use std::sync::{Arc, RwLock};

const MAGIC: &str = "dgadapt-mesh 1";

fn kind_char(k: BoundaryKind) -> char {
    match k {
        BoundaryKind::Dirichlet => 'D',
        BoundaryKind::Neumann => 'N',
    }
}

fn parse_kind(s: &str) -> Result<BoundaryKind> {
    match s {
        "D" => Ok(BoundaryKind::Dirichlet),
        "N" => Ok(BoundaryKind::Neumann),
        _ => Err(Error::Parse(format!("unknown boundary kind '{s}'"))),
    }
}

pub fn write_mesh_text(mesh: &Mesh) -> String {
    let f = mesh.forest().read().unwrap();
    let d = mesh.domain();
    let b = mesh.boundary();
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "domain {:e} {:e} {:e} {:e}", d.x0, d.x1, d.y0, d.y1);
    let _ = writeln!(
        s,
        "boundary {} {} {} {}",
        kind_char(b.left),
        kind_char(b.right),
        kind_char(b.bottom),
        kind_char(b.top)
    );
    let _ = writeln!(s, "vertices {}", f.vertices.len());
    for p in &f.vertices {
        let _ = writeln!(s, "{:e} {:e}", p[0], p[1]);
    }
    let _ = writeln!(s, "nodes {}", f.nodes.len());
    for n in &f.nodes {
        let parent = n.parent.map_or(-1, |p| p as i64);
        let _ = writeln!(s, "{} {} {} {}", n.verts[0], n.verts[1], n.verts[2], parent);
    }
    let _ = writeln!(s, "leaves {}", mesh.num_cells());
    for c in mesh.cells() {
        let _ = writeln!(s, "{}", c.node);
    }
    s
}

struct Lines<'a> {
    it: std::iter::Filter<std::str::Lines<'a>, fn(&&str) -> bool>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<Vec<&'a str>> {
        self.it
            .next()
            .map(|l| l.split_whitespace().collect())
            .ok_or_else(|| Error::Parse("unexpected end of mesh file".into()))
    }

    fn header(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let t = self.next()?;
        if t.first() != Some(&key) {
            return Err(Error::Parse(format!("expected '{key}' section")));
        }
        Ok(t[1..].to_vec())
    }
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("bad number '{s}'")))
}

pub fn read_mesh_text(text: &str) -> Result<Mesh> {
    let keep: fn(&&str) -> bool = |l| !l.trim().is_empty();
    let mut lines = Lines { it: text.lines().filter(keep) };
    if lines.next()?.join(" ") != MAGIC {
        return Err(Error::Parse("not a dgadapt mesh file".into()));
    }
    let d = lines.header("domain")?;
    if d.len() != 4 {
        return Err(Error::Parse("domain needs 4 numbers".into()));
    }
    let domain = Rect::new(num(d[0])?, num(d[1])?, num(d[2])?, num(d[3])?);
    let b = lines.header("boundary")?;
    if b.len() != 4 {
        return Err(Error::Parse("boundary needs 4 tags".into()));
    }
    let boundary = BoundaryTags {
        left: parse_kind(b[0])?,
        right: parse_kind(b[1])?,
        bottom: parse_kind(b[2])?,
        top: parse_kind(b[3])?,
    };
    let nv: usize = num(lines.header("vertices")?.first().copied().unwrap_or(""))?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let t = lines.next()?;
        if t.len() != 2 {
            return Err(Error::Parse("vertex needs 2 coordinates".into()));
        }
        vertices.push([num(t[0])?, num(t[1])?]);
    }
    let nn: usize = num(lines.header("nodes")?.first().copied().unwrap_or(""))?;
    let mut records = Vec::with_capacity(nn);
    for _ in 0..nn {
        let t = lines.next()?;
        if t.len() != 4 {
            return Err(Error::Parse("node needs 3 vertices and a parent".into()));
        }
        let parent: i64 = num(t[3])?;
        records.push(([num(t[0])?, num(t[1])?, num(t[2])?], (parent >= 0).then_some(parent as usize)));
    }
    let forest = Forest::from_records(vertices, &records).ok_or_else(|| Error::Parse("inconsistent forest".into()))?;
    let nl: usize = num(lines.header("leaves")?.first().copied().unwrap_or(""))?;
    let mut leaves: Vec<NodeId> = Vec::with_capacity(nl);
    for _ in 0..nl {
        let id: usize = num(lines.next()?.first().copied().unwrap_or(""))?;
        if id >= forest.nodes.len() || forest.nodes[id].children.is_some() {
            return Err(Error::Parse(format!("leaf {id} is not a forest leaf")));
        }
        leaves.push(id);
    }
    let area: f64 = leaves
        .iter()
        .map(|&t| {
            let x = forest.coords(t);
            0.5 * crate::geometry::signed_area2(x[0], x[1], x[2])
        })
        .sum();
    if (area - domain.area()).abs() > 1e-9 * domain.area() {
        return Err(Error::Parse("leaves do not tile the domain".into()));
    }
    Ok(Mesh::from_leaves(Arc::new(RwLock::new(forest)), domain, boundary, leaves))
}
