//! Legacy ASCII VTK unstructured grids. Vertices are duplicated per cell so
//! discontinuous fields keep their element-wise traces.

use crate::dg::space::DGFunction;
use crate::error::Result;
use crate::geometry::Point;
use crate::mesh::Mesh;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

const VTK_TRIANGLE: u8 = 5;

#[derive(Default)]
pub struct VtkFields {
    /// Values at the three vertices of every cell.
    pub point_scalars: Vec<(String, Vec<[f64; 3]>)>,
    pub cell_scalars: Vec<(String, Vec<f64>)>,
    pub cell_vectors: Vec<(String, Vec<Point>)>,
}

impl VtkFields {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solution(mut self, name: &str, u: &DGFunction) -> Self {
        self.point_scalars.push((name.to_string(), u.vertex_values()));
        let means = (0..u.space.mesh().num_cells()).map(|i| u.cell_mean(i)).collect();
        self.cell_scalars.push((format!("{name}_mean"), means));
        self
    }

    pub fn cell(mut self, name: &str, values: Vec<f64>) -> Self {
        self.cell_scalars.push((name.to_string(), values));
        self
    }

    pub fn cell_vector(mut self, name: &str, values: Vec<Point>) -> Self {
        self.cell_vectors.push((name.to_string(), values));
        self
    }
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
}

pub fn write_vtk<W: Write>(mut w: W, mesh: &Mesh, title: &str, fields: &VtkFields) -> Result<()> {
    let n = mesh.num_cells();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", 3 * n)?;
    for c in mesh.cells() {
        for p in &c.x {
            writeln!(w, "{:.16e} {:.16e} 0", p[0], p[1])?;
        }
    }
    writeln!(w, "CELLS {} {}", n, 4 * n)?;
    for i in 0..n {
        writeln!(w, "3 {} {} {}", 3 * i, 3 * i + 1, 3 * i + 2)?;
    }
    writeln!(w, "CELL_TYPES {n}")?;
    for _ in 0..n {
        writeln!(w, "{VTK_TRIANGLE}")?;
    }
    if !fields.cell_scalars.is_empty() || !fields.cell_vectors.is_empty() {
        writeln!(w, "CELL_DATA {n}")?;
        for (name, v) in &fields.cell_scalars {
            assert_eq!(v.len(), n, "cell field {name} has the wrong length");
            writeln!(w, "SCALARS {} double 1", sanitize(name))?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for x in v {
                writeln!(w, "{x:.16e}")?;
            }
        }
        for (name, v) in &fields.cell_vectors {
            assert_eq!(v.len(), n, "cell field {name} has the wrong length");
            writeln!(w, "VECTORS {} double", sanitize(name))?;
            for x in v {
                writeln!(w, "{:.16e} {:.16e} 0", x[0], x[1])?;
            }
        }
    }
    if !fields.point_scalars.is_empty() {
        writeln!(w, "POINT_DATA {}", 3 * n)?;
        for (name, v) in &fields.point_scalars {
            assert_eq!(v.len(), n, "point field {name} has the wrong length");
            writeln!(w, "SCALARS {} double 1", sanitize(name))?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for tri in v {
                for x in tri {
                    writeln!(w, "{x:.16e}")?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_vtk_file(path: &Path, mesh: &Mesh, title: &str, fields: &VtkFields) -> Result<()> {
    write_vtk(BufWriter::new(File::create(path)?), mesh, title, fields)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::DGSpace;
    use crate::geometry::Rect;
    use std::sync::Arc;

    #[test]
    fn two_triangles_with_constant_field() {
        let m = Arc::new(Mesh::build_structured(Rect::unit(), 1, 1).unwrap());
        let s = DGSpace::new(m.clone(), 1).unwrap();
        let u = s.project(|_| 2.5);
        let f = VtkFields::new().solution("u", &u).cell("eta S1", vec![0.0, 1.0]);
        let mut buf = Vec::new();
        write_vtk(&mut buf, &m, "test", &f).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("CELLS 2 8\n"));
        assert!(text.contains("CELL_TYPES 2\n5\n5\n"));
        assert!(text.contains("CELL_DATA 2\n"));
        assert!(text.contains("SCALARS eta_S1 double 1"));
        let after = text.split("POINT_DATA 6\nSCALARS u double 1\nLOOKUP_TABLE default\n").nth(1).unwrap();
        let vals: Vec<f64> = after.lines().take(6).map(|l| l.parse().unwrap()).collect();
        assert!(vals.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }
}
