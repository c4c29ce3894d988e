//! Planar polygon support for the archetype geometry kernel.
//!
//! Coordinates live in the normalized half-cavity square [0, 1]² and are
//! snapped to a 2^-20 grid when a polygon is built. The snap serves two
//! purposes: features stay far coarser than the grid (channel widths are
//! ≥ 3 × 10⁻² vs. a 10⁻⁶ grid), and `1 − x` is exact for dyadic x with ≤ 20
//! fractional bits, which makes mirroring a bit-level involution.

/// Snap a coordinate to the 2^-20 lattice.
pub fn snap(x: f64) -> f64 {
    const GRID: f64 = (1u64 << 20) as f64;
    (x * GRID).round() / GRID
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Orientation of the triple (a, b, c): > 0 counter-clockwise, < 0 clockwise,
/// 0 collinear. Plain f64 arithmetic; inputs are lattice points so the scales
/// involved keep this reliable for the uses below.
fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    orient(a, b, p) == 0.0
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

/// Do closed segments [a, b] and [c, d] intersect?
fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if ((o1 > 0.0) != (o2 > 0.0)) && ((o3 > 0.0) != (o4 > 0.0)) && o1 != 0.0 && o2 != 0.0 {
        return true;
    }
    on_segment(a, b, c) || on_segment(a, b, d) || on_segment(c, d, a) || on_segment(c, d, b)
}

/// A simple closed polygon (implicitly closed: last vertex connects to first).
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PolygonError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is degenerate (area below 1e-9)")]
    Degenerate,
    #[error("polygon edges self-intersect")]
    SelfIntersecting,
}

impl Polygon {
    /// Build a polygon, snapping coordinates to the lattice and validating
    /// that the result is simple and non-degenerate.
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self, PolygonError> {
        if vertices.len() < 3 {
            return Err(PolygonError::TooFewVertices(vertices.len()));
        }
        let vertices: Vec<Point> = vertices
            .into_iter()
            .map(|(x, y)| Point::new(snap(x), snap(y)))
            .collect();
        let poly = Polygon { vertices };
        if poly.area().abs() < 1e-9 {
            return Err(PolygonError::Degenerate);
        }
        if !poly.is_simple() {
            return Err(PolygonError::SelfIntersecting);
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Signed area (shoelace); positive for counter-clockwise winding.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let mut s = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            s += a.x * b.y - b.x * a.y;
        }
        s / 2.0
    }

    /// True when no two non-adjacent edges intersect and no adjacent edges
    /// overlap beyond their shared vertex.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        let edge = |i: usize| (self.vertices[i], self.vertices[(i + 1) % n]);
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a, b) = edge(i);
                let (c, d) = edge(j);
                if adjacent {
                    // Shared vertex is fine; spur (collinear fold-back) is not.
                    let shared = if j == i + 1 { b } else { a };
                    let (p, q) = if j == i + 1 { (a, d) } else { (d, a) };
                    let _ = shared;
                    if orient(p, shared, q) == 0.0
                        && (p.x - shared.x) * (q.x - shared.x)
                            + (p.y - shared.y) * (q.y - shared.y)
                            > 0.0
                    {
                        return false;
                    }
                } else if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    /// Even-odd ray-cast membership with the half-open edge convention
    /// (deterministic on boundary-grazing queries).
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let vi = self.vertices[i];
            let vj = self.vertices[j];
            if (vi.y > y) != (vj.y > y) {
                let x_cross = vj.x + (y - vj.y) / (vi.y - vj.y) * (vi.x - vj.x);
                if x < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Mirror about the vertical midline x = 1/2 of the unit square, with the
    /// vertex order reversed so winding (and simplicity) is preserved.
    pub fn mirrored(&self) -> Polygon {
        let vertices = self
            .vertices
            .iter()
            .rev()
            .map(|p| Point::new(1.0 - p.x, p.y))
            .collect();
        Polygon { vertices }
    }

    /// Axis-aligned bounding box as (min_x, min_y, max_x, max_y).
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        let mut bb = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            bb.0 = bb.0.min(p.x);
            bb.1 = bb.1.min(p.y);
            bb.2 = bb.2.max(p.x);
            bb.3 = bb.3.max(p.y);
        }
        bb
    }
}

/// Axis-aligned rectangle helper.
pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Polygon, PolygonError> {
    Polygon::new(vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
}

/// A channel strip of full width `width` along the segment from `a` to `b`
/// (a quadrilateral with ends square to the center line).
pub fn strip(a: (f64, f64), b: (f64, f64), width: f64) -> Result<Polygon, PolygonError> {
    let (ax, ay) = a;
    let (bx, by) = b;
    let (dx, dy) = (bx - ax, by - ay);
    let len = (dx * dx + dy * dy).sqrt();
    let (nx, ny) = (-dy / len, dx / len);
    let h = width / 2.0;
    Polygon::new(vec![
        (ax + nx * h, ay + ny * h),
        (ax - nx * h, ay - ny * h),
        (bx - nx * h, by - ny * h),
        (bx + nx * h, by + ny * h),
    ])
}
