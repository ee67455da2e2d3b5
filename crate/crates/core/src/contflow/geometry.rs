//! Convex polygons, half-planes and affine vector fields in the plane.

pub type Point = [f64; 2];

/// `{ (x, y) : a·x + b·y ≤ c }`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HalfPlane {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        HalfPlane { a, b, c }
    }

    fn slack(&self, p: Point) -> f64 {
        self.c - self.a * p[0] - self.b * p[1]
    }
}

/// A convex polygon with counterclockwise vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Polygon { vertices: vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]] }
    }

    /// Intersection of `bounds` with the half-planes, by successive clipping.
    pub fn clipped(bounds: &Polygon, planes: &[HalfPlane]) -> Self {
        planes.iter().fold(bounds.clone(), |poly, h| poly.clip(h))
    }

    pub fn clip(&self, h: &HalfPlane) -> Polygon {
        let v = &self.vertices;
        let mut out = Vec::with_capacity(v.len() + 1);
        for i in 0..v.len() {
            let (p, q) = (v[i], v[(i + 1) % v.len()]);
            let (sp, sq) = (h.slack(p), h.slack(q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        out.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
        if out.len() > 1 && out.first() == out.last() {
            out.pop();
        }
        Polygon { vertices: out }
    }

    /// The half-planes bounding the polygon, as `a·x + b·y ≤ c`.
    pub fn edges(&self) -> Vec<HalfPlane> {
        let v = &self.vertices;
        (0..v.len())
            .map(|i| {
                let (p, q) = (v[i], v[(i + 1) % v.len()]);
                let (ex, ey) = (q[0] - p[0], q[1] - p[1]);
                HalfPlane::new(ey, -ex, ey * p[0] - ex * p[1])
            })
            .collect()
    }

    /// `self \ other` as disjoint convex pieces.
    pub fn difference(&self, other: &Polygon) -> Vec<Polygon> {
        if other.vertices.len() < 3 {
            return vec![self.clone()];
        }
        let mut out = Vec::new();
        let mut rest = self.clone();
        for e in other.edges() {
            let outside = rest.clip(&HalfPlane::new(-e.a, -e.b, -e.c));
            if !outside.is_degenerate(0.0) {
                out.push(outside);
            }
            rest = rest.clip(&e);
            if rest.is_degenerate(0.0) {
                break;
            }
        }
        out
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return 0.0;
        }
        0.5 * (0..n).map(|i| v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1]).sum::<f64>()
    }

    pub fn is_degenerate(&self, tol: f64) -> bool {
        self.area() <= tol
    }

    /// Smallest signed distance from `p` to the edge lines; positive inside.
    pub fn depth(&self, p: Point) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return f64::NEG_INFINITY;
        }
        let mut d = f64::INFINITY;
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
            let len = ex.hypot(ey);
            if len == 0.0 {
                continue;
            }
            d = d.min((ex * (p[1] - a[1]) - ey * (p[0] - a[0])) / len);
        }
        d
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Fan triangulation from the first vertex.
    pub fn triangles(&self) -> Vec<[Point; 3]> {
        let v = &self.vertices;
        (1..v.len().saturating_sub(1)).map(|i| [v[0], v[i], v[i + 1]]).collect()
    }
}

/// `v(x) = m·x + c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine {
    pub m: [[f64; 2]; 2],
    pub c: [f64; 2],
}

impl Affine {
    pub const ZERO: Affine = Affine { m: [[0.0; 2]; 2], c: [0.0; 2] };

    pub fn eval(&self, p: Point) -> Point {
        [
            self.m[0][0] * p[0] + self.m[0][1] * p[1] + self.c[0],
            self.m[1][0] * p[0] + self.m[1][1] * p[1] + self.c[1],
        ]
    }

    pub fn divergence(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }
}

pub(crate) fn norm(p: Point) -> f64 {
    p[0].hypot(p[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping_a_square_by_a_diagonal_leaves_a_triangle() {
        let sq = Polygon::rect(0.0, 0.0, 1.0, 1.0);
        let tri = sq.clip(&HalfPlane::new(1.0, 1.0, 1.0));
        assert_eq!(tri.vertices.len(), 3);
        assert!((tri.area() - 0.5).abs() < 1e-15);
        assert!(tri.depth([0.2, 0.2]) > 0.0);
        assert!(tri.depth([0.8, 0.8]) < 0.0);
    }

    #[test]
    fn difference_preserves_area() {
        let a = Polygon::rect(0.0, 0.0, 2.0, 2.0);
        let b = Polygon::rect(1.0, 1.0, 3.0, 3.0);
        let parts = a.difference(&b);
        let area: f64 = parts.iter().map(Polygon::area).sum();
        assert!((area - 3.0).abs() < 1e-14);
        assert!(parts.iter().all(|p| p.depth([1.5, 1.5]) <= 0.0));
    }
}
