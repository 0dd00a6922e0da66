//! Convex cells of a line arrangement clipped to a box, built by successive
//! polygon splitting.

use alloc::vec::Vec;

// Unused only when std is linked somewhere in the build.
#[allow(unused_imports)]
use num_traits::Float;

/// Points closer than this to a line are treated as lying on it.
pub const ON_LINE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    /// Horizontal coordinate, `r2`.
    pub x: f64,
    /// Vertical coordinate, `r0`.
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(self.x + t * (other.x - self.x), self.y + t * (other.y - self.y))
    }
}

/// What produced a polygon edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Window,
    /// Real root boundary `r0 = 0`.
    Rrb,
    /// Complex root boundary, index into the slice's line list.
    Crb(usize),
}

/// `nx * x + ny * y + c = 0` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub nx: f64,
    pub ny: f64,
    pub c: f64,
}

impl Line {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        let norm = a.hypot(b);
        Self { nx: a / norm, ny: b / norm, c: c / norm }
    }

    /// `y = slope * x + intercept`.
    pub fn from_slope(slope: f64, intercept: f64) -> Self {
        Self::new(-slope, 1.0, -intercept)
    }

    pub fn signed_distance(&self, p: Point) -> f64 {
        self.nx * p.x + self.ny * p.y + self.c
    }

    fn intersect(&self, a: Point, da: f64, b: Point, db: f64) -> Point {
        a.lerp(b, da / (da - db))
    }
}

/// Convex polygon, counterclockwise, with `kinds[i]` labelling edge `i -> i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Point>,
    pub kinds: Vec<EdgeKind>,
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    In,
    On,
    Out,
}

impl Polygon {
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64, bottom: EdgeKind) -> Self {
        Self {
            vertices: alloc::vec![
                Point::new(x0, y0),
                Point::new(x1, y0),
                Point::new(x1, y1),
                Point::new(x0, y1),
            ],
            kinds: alloc::vec![bottom, EdgeKind::Window, EdgeKind::Window, EdgeKind::Window],
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, i: usize) -> (Point, Point) {
        (self.vertices[i], self.vertices[(i + 1) % self.len()])
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let (a, b) = self.edge(i);
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
            / 2.0
    }

    pub fn centroid(&self) -> Point {
        let n = self.len();
        let mut area = 0.0;
        let (mut cx, mut cy) = (0.0, 0.0);
        // Shift to the first vertex for conditioning.
        let o = self.vertices[0];
        for i in 0..n {
            let (a, b) = self.edge(i);
            let (ax, ay, bx, by) = (a.x - o.x, a.y - o.y, b.x - o.x, b.y - o.y);
            let cross = ax * by - bx * ay;
            area += cross;
            cx += (ax + bx) * cross;
            cy += (ay + by) * cross;
        }
        if area.abs() <= f64::MIN_POSITIVE {
            let (sx, sy) = self.vertices.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
            return Point::new(sx / n as f64, sy / n as f64);
        }
        Point::new(o.x + cx / (3.0 * area), o.y + cy / (3.0 * area))
    }

    /// Strict interior test with a tolerance band around the edges.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.boundary_distance(p).is_some_and(|d| d > tol)
    }

    /// Distance from an inside point to the closest edge line, `None` if outside.
    pub fn boundary_distance(&self, p: Point) -> Option<f64> {
        let mut best = f64::INFINITY;
        for i in 0..self.len() {
            let (a, b) = self.edge(i);
            let (ex, ey) = (b.x - a.x, b.y - a.y);
            let len = ex.hypot(ey);
            if len == 0.0 {
                continue;
            }
            // Left of a counterclockwise edge is inside.
            let d = (ex * (p.y - a.y) - ey * (p.x - a.x)) / len;
            if d < 0.0 {
                return None;
            }
            best = best.min(d);
        }
        Some(best)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        (lo, hi)
    }

    /// Keep the part with `sign * distance >= 0`; the new edge is labelled `cut`.
    fn clip(&self, line: &Line, sign: f64, cut: EdgeKind) -> Option<Polygon> {
        let n = self.len();
        let dist: Vec<f64> = self.vertices.iter().map(|&v| sign * line.signed_distance(v)).collect();
        let side = |d: f64| {
            if d > ON_LINE_TOL {
                Side::In
            } else if d < -ON_LINE_TOL {
                Side::Out
            } else {
                Side::On
            }
        };
        let mut out = Polygon { vertices: Vec::new(), kinds: Vec::new() };
        for i in 0..n {
            let j = (i + 1) % n;
            let (a, b) = (self.vertices[i], self.vertices[j]);
            let (da, db) = (dist[i], dist[j]);
            let kind = self.kinds[i];
            match (side(da), side(db)) {
                (Side::In, Side::Out) => {
                    out.push(a, kind);
                    out.push(line.intersect(a, da, b, db), cut);
                }
                (Side::In, _) => out.push(a, kind),
                (Side::On, Side::Out) => out.push(a, cut),
                (Side::On, _) => out.push(a, kind),
                (Side::Out, Side::In) => out.push(line.intersect(a, da, b, db), kind),
                (Side::Out, _) => {}
            }
        }
        if out.len() < 3 || out.signed_area() <= ON_LINE_TOL * ON_LINE_TOL {
            None
        } else {
            Some(out)
        }
    }

    /// Both sides of `line`, or `None` when the line does not cross the interior.
    pub fn split(&self, line: &Line, cut: EdgeKind) -> Option<(Polygon, Polygon)> {
        let pos = self.clip(line, 1.0, cut)?;
        let neg = self.clip(line, -1.0, cut)?;
        Some((pos, neg))
    }

    fn push(&mut self, p: Point, kind: EdgeKind) {
        self.vertices.push(p);
        self.kinds.push(kind);
    }
}

/// Split every cell by every line in turn.
pub fn arrange(initial: Polygon, lines: &[(Line, EdgeKind)]) -> Vec<Polygon> {
    let mut cells = alloc::vec![initial];
    for (line, kind) in lines {
        let mut next = Vec::with_capacity(cells.len() + 1);
        for cell in cells {
            match cell.split(line, *kind) {
                Some((a, b)) => {
                    next.push(a);
                    next.push(b);
                }
                None => next.push(cell),
            }
        }
        cells = next;
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Polygon {
        Polygon::rectangle(0.0, 1.0, 0.0, 1.0, EdgeKind::Rrb)
    }

    #[test]
    fn diagonal_split() {
        let (a, b) = unit().split(&Line::from_slope(1.0, 0.0), EdgeKind::Crb(0)).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(b.len(), 3);
        assert!((a.signed_area() - 0.5).abs() < 1e-15);
        assert!((b.signed_area() - 0.5).abs() < 1e-15);
        assert!(a.kinds.contains(&EdgeKind::Crb(0)));
    }

    #[test]
    fn line_outside_does_not_split() {
        assert!(unit().split(&Line::from_slope(0.0, 2.0), EdgeKind::Crb(0)).is_none());
        // Along an existing edge.
        assert!(unit().split(&Line::from_slope(0.0, 1.0), EdgeKind::Crb(0)).is_none());
    }

    #[test]
    fn areas_are_conserved() {
        let lines = [
            (Line::from_slope(2.0, -0.5), EdgeKind::Crb(0)),
            (Line::from_slope(-1.0, 0.8), EdgeKind::Crb(1)),
            (Line::new(1.0, 0.0, -0.3), EdgeKind::Crb(2)),
        ];
        let cells = arrange(unit(), &lines);
        assert!(cells.len() >= 6);
        let total: f64 = cells.iter().map(Polygon::signed_area).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for c in &cells {
            assert!(c.signed_area() > 0.0);
            assert!(c.contains(c.centroid(), 0.0));
        }
    }

    #[test]
    fn interior_and_distance() {
        let p = unit();
        assert!(p.contains(Point::new(0.5, 0.5), 0.1));
        assert!(!p.contains(Point::new(0.5, 0.05), 0.1));
        assert!(!p.contains(Point::new(1.5, 0.5), 0.0));
        assert!((p.boundary_distance(Point::new(0.2, 0.5)).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(p.centroid(), Point::new(0.5, 0.5));
    }
}
