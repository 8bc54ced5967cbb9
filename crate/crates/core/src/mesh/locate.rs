//! Point location on a leaf mesh through a uniform bucket grid.

use super::Mesh;
use crate::geometry::Point;

#[derive(Clone, Debug)]
pub struct PointLocator {
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl PointLocator {
    pub fn new(mesh: &Mesh) -> Self {
        let d = mesh.domain();
        let n = ((mesh.num_cells() as f64).sqrt().ceil() as usize).max(1);
        let (nx, ny) = (n, n);
        let dx = (d.x1 - d.x0) / nx as f64;
        let dy = (d.y1 - d.y0) / ny as f64;
        let mut buckets = vec![Vec::new(); nx * ny];
        let clamp_x = |x: f64| (((x - d.x0) / dx).floor().max(0.0) as usize).min(nx - 1);
        let clamp_y = |y: f64| (((y - d.y0) / dy).floor().max(0.0) as usize).min(ny - 1);
        for (ci, c) in mesh.cells().iter().enumerate() {
            let xmin = c.x.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let xmax = c.x.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            let ymin = c.x.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
            let ymax = c.x.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
            for j in clamp_y(ymin)..=clamp_y(ymax) {
                for i in clamp_x(xmin)..=clamp_x(xmax) {
                    buckets[j * nx + i].push(ci);
                }
            }
        }
        PointLocator { x0: d.x0, y0: d.y0, dx, dy, nx, ny, buckets }
    }

    /// Leaf containing `p`, with a small tolerance for points on edges.
    pub fn locate(&self, mesh: &Mesh, p: Point) -> Option<usize> {
        let i = ((p[0] - self.x0) / self.dx).floor();
        let j = ((p[1] - self.y0) / self.dy).floor();
        if i < -1.0 || j < -1.0 || i > self.nx as f64 || j > self.ny as f64 {
            return None;
        }
        let i = (i.max(0.0) as usize).min(self.nx - 1);
        let j = (j.max(0.0) as usize).min(self.ny - 1);
        let cands = &self.buckets[j * self.nx + i];
        cands
            .iter()
            .copied()
            .find(|&c| mesh.cell(c).contains(p, 1e-12))
            .or_else(|| cands.iter().copied().find(|&c| mesh.cell(c).contains(p, 1e-9)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;

    #[test]
    fn locates_centroids() {
        let m = Mesh::build_structured(Rect::new(0.0, 3.0, 0.0, 2.0), 5, 3).unwrap().refine(&[2, 7]).unwrap();
        let loc = PointLocator::new(&m);
        for (i, c) in m.cells().iter().enumerate() {
            assert_eq!(loc.locate(&m, c.centroid()), Some(i));
        }
        assert!(loc.locate(&m, [1.0, 1.0]).is_some());
        assert!(loc.locate(&m, [9.0, 1.0]).is_none());
    }
}
