use std::ops::{Add, Mul, Sub};

/// A point of the plane, in trap units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn midpoint(a: Point, b: Point) -> Point {
        Point::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y))
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, rhs: Point) -> Point {
        Point::new(self * rhs.x, self * rhs.y)
    }
}

/// Twice the signed area of the triangle `abc` (positive when counterclockwise).
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

pub fn triangle_area(v: &[Point; 3]) -> f64 {
    0.5 * orient(v[0], v[1], v[2]).abs()
}

/// Barycentric coordinates of `p` with respect to the triangle `v`.
pub fn barycentric(v: &[Point; 3], p: Point) -> [f64; 3] {
    let det = orient(v[0], v[1], v[2]);
    let l1 = orient(v[0], p, v[2]) / det;
    let l2 = orient(v[0], v[1], p) / det;
    [1.0 - l1 - l2, l1, l2]
}

pub fn from_barycentric(v: &[Point; 3], l: [f64; 3]) -> Point {
    Point::new(
        l[0] * v[0].x + l[1] * v[1].x + l[2] * v[2].x,
        l[0] * v[0].y + l[1] * v[1].y + l[2] * v[2].y,
    )
}

/// Clips a convex polygon against the closed half-plane to the left of the
/// directed line `a -> b`.
pub(crate) fn clip_half_plane(poly: &[Point], a: Point, b: Point, tol: f64) -> Vec<Point> {
    let side = |p: Point| orient(a, b, p);
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let s = poly[i];
        let e = poly[(i + 1) % poly.len()];
        let (fs, fe) = (side(s), side(e));
        let s_in = fs >= -tol;
        let e_in = fe >= -tol;
        if s_in {
            out.push(s);
        }
        if s_in != e_in && (fs.abs() > tol && fe.abs() > tol) {
            let t = fs / (fs - fe);
            out.push(s + t * (e - s));
        }
    }
    out
}

/// Intersection of two counterclockwise triangles as a convex polygon.
pub(crate) fn intersect_triangles(a: &[Point; 3], b: &[Point; 3]) -> Vec<Point> {
    let scale = [a[1] - a[0], a[2] - a[0], b[1] - b[0], b[2] - b[0]]
        .iter()
        .map(|d| d.dot(*d))
        .fold(0.0, f64::max);
    let tol = 1e-12 * scale;
    let mut poly: Vec<Point> = a.to_vec();
    for k in 0..3 {
        if poly.len() < 3 {
            return Vec::new();
        }
        poly = clip_half_plane(&poly, b[k], b[(k + 1) % 3], tol);
    }
    if poly.len() < 3 {
        return Vec::new();
    }
    poly
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barycentric_of_centroid() {
        let t = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let c = Point::new(1.0 / 3.0, 1.0 / 3.0);
        let l = barycentric(&t, c);
        for v in l {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let back = from_barycentric(&t, l);
        assert!(back.distance(c) < 1e-15);
    }

    #[test]
    fn clipping_a_triangle_by_itself_is_identity() {
        let t = [Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(0.0, 1.0)];
        let poly = intersect_triangles(&t, &t);
        assert_eq!(poly.len(), 3);
        assert_eq!(poly, t.to_vec());
    }

    #[test]
    fn clipping_half_triangle() {
        let t = [Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(0.0, 2.0)];
        let half = [Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 2.0)];
        let poly = intersect_triangles(&t, &half);
        let area: f64 = (1..poly.len() - 1)
            .map(|i| 0.5 * orient(poly[0], poly[i], poly[i + 1]))
            .sum();
        assert!((area - 1.0).abs() < 1e-14);
    }
}
