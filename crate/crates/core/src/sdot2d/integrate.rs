//! Quadrature over convex cells and along their edges.

use super::geometry::{polygon_centroid, Point};
use crate::quadrature::{gl8, TRIANGLE_RULE};

/// Number of midpoint subdivisions applied to every fan triangle.
pub const CELL_REFINEMENT: u32 = 2;

/// Quadrature nodes `(x, w)` for a convex polygon: fan triangulation from the
/// centroid, each triangle split `4^refinement` ways and integrated with the
/// seven point degree-five rule. Empty for degenerate polygons.
pub fn cell_nodes(vertices: &[Point], refinement: u32) -> Vec<(Point, f64)> {
    let m = vertices.len();
    if m < 3 {
        return Vec::new();
    }
    let c = polygon_centroid(vertices);
    let mut out = Vec::with_capacity(m * 7 * 4usize.pow(refinement));
    for k in 0..m {
        push_triangle(&mut out, c, vertices[k], vertices[(k + 1) % m], refinement);
    }
    out
}

fn push_triangle(out: &mut Vec<(Point, f64)>, a: Point, b: Point, c: Point, level: u32) {
    if level > 0 {
        let mid = |p: Point, q: Point| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        push_triangle(out, a, ab, ca, level - 1);
        push_triangle(out, ab, b, bc, level - 1);
        push_triangle(out, ca, bc, c, level - 1);
        push_triangle(out, ab, bc, ca, level - 1);
        return;
    }
    let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
    if area == 0.0 {
        return;
    }
    for (l, w) in TRIANGLE_RULE.iter() {
        let p = [
            l[0] * a[0] + l[1] * b[0] + l[2] * c[0],
            l[0] * a[1] + l[1] * b[1] + l[2] * c[1],
        ];
        out.push((p, area * w));
    }
}

/// Gauss–Legendre nodes along the segment `[a, b]`, weights scaled by its length.
pub fn edge_nodes(a: Point, b: Point) -> impl Iterator<Item = (Point, f64)> {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    gl8().mapped(0.0, 1.0).map(move |(t, w)| ([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], w * len))
}

/// `∫_cell f p`; zero for degenerate cells.
pub fn cell_integral(vertices: &[Point], p: impl Fn(Point) -> f64, f: impl Fn(Point) -> f64) -> f64 {
    cell_nodes(vertices, CELL_REFINEMENT).into_iter().map(|(x, w)| w * p(x) * f(x)).sum()
}

/// Vector valued version of [`cell_integral`].
pub fn cell_integral_vec<const K: usize>(
    vertices: &[Point],
    p: impl Fn(Point) -> f64,
    f: impl Fn(Point) -> [f64; K],
) -> [f64; K] {
    let mut acc = [0.0; K];
    for (x, w) in cell_nodes(vertices, CELL_REFINEMENT) {
        let px = w * p(x);
        for (a, v) in acc.iter_mut().zip(f(x)) {
            *a += px * v;
        }
    }
    acc
}
