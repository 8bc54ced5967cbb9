//! Small planar geometry helpers shared by the mesh and the discretisation.

/// A point (or vector) in the plane.
pub type Point = [f64; 2];

/// Symmetric 2x2 tensor stored as `[[xx, xy], [yx, yy]]`.
pub type Tensor2 = [[f64; 2]; 2];

pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

pub fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Twice the signed area of the triangle `(a, b, c)`; positive when counterclockwise.
pub fn signed_area2(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

pub fn mat_vec(m: &Tensor2, v: Point) -> Point {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn isotropic(e: f64) -> Tensor2 {
    [[e, 0.0], [0.0, e]]
}

/// Smallest eigenvalue of a symmetric 2x2 tensor.
pub fn min_eigenvalue(m: &Tensor2) -> f64 {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    0.5 * tr - disc
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn unit() -> Self {
        Rect::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p[0] >= self.x0 - tol && p[0] <= self.x1 + tol && p[1] >= self.y0 - tol && p[1] <= self.y1 + tol
    }

    pub fn diameter(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_sign() {
        assert!(signed_area2([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]) > 0.0);
        assert!(signed_area2([0.0, 0.0], [0.0, 1.0], [1.0, 0.0]) < 0.0);
    }

    #[test]
    fn eigenvalue_of_diagonal_tensor() {
        let t = [[1e-3, 0.0], [0.0, 1e-4]];
        assert!((min_eigenvalue(&t) - 1e-4).abs() < 1e-18);
    }
}
