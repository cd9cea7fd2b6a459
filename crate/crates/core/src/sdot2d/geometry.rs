//! Convex polygons and power diagrams by half-plane clipping.

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn norm2(a: Point) -> f64 {
    dot(a, a)
}

/// Counterclockwise convex polygon with nonzero area.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    /// Validates convexity and orientation; clockwise input is reversed.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Config("support polygon needs at least three vertices".into()));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("support polygon has non-finite vertices".into()));
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let area = signed_area(&vertices);
        let scale = vertices.iter().map(|v| norm2(*v)).fold(0.0, f64::max).max(1.0);
        if area <= 1e-14 * scale {
            return Err(Error::Config("support polygon has zero area".into()));
        }
        let m = vertices.len();
        for k in 0..m {
            let a = vertices[k];
            let b = vertices[(k + 1) % m];
            let c = vertices[(k + 2) % m];
            if cross(sub(b, a), sub(c, b)) < -1e-12 * scale {
                return Err(Error::Config("support polygon is not convex".into()));
            }
        }
        Ok(Self { vertices })
    }

    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]).expect("valid rectangle")
    }

    pub fn unit_square() -> Self {
        Self::rectangle(0.0, 1.0, 0.0, 1.0)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn translated(&self, shift: Point) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| [v[0] + shift[0], v[1] + shift[1]]).collect(),
        }
    }

    pub fn bounding_box(&self) -> [(f64, f64); 2] {
        let mut b = [(f64::INFINITY, f64::NEG_INFINITY); 2];
        for v in &self.vertices {
            for a in 0..2 {
                b[a].0 = b[a].0.min(v[a]);
                b[a].1 = b[a].1.max(v[a]);
            }
        }
        b
    }

    pub fn contains(&self, x: Point) -> bool {
        let m = self.vertices.len();
        (0..m).all(|k| cross(sub(self.vertices[(k + 1) % m], self.vertices[k]), sub(x, self.vertices[k])) >= -1e-12)
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point {
        polygon_centroid(&self.vertices)
    }

    /// Distance from `x` (assumed inside) to the boundary.
    pub fn inradius_at(&self, x: Point) -> f64 {
        let m = self.vertices.len();
        (0..m)
            .map(|k| {
                let a = self.vertices[k];
                let e = sub(self.vertices[(k + 1) % m], a);
                cross(e, sub(x, a)) / norm2(e).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn signed_area(v: &[Point]) -> f64 {
    let m = v.len();
    0.5 * (0..m).map(|k| cross(v[k], v[(k + 1) % m])).sum::<f64>()
}

pub(crate) fn polygon_centroid(v: &[Point]) -> Point {
    let m = v.len();
    let a = signed_area(v);
    if a.abs() < 1e-300 {
        let s = v.iter().fold([0.0, 0.0], |s, p| [s[0] + p[0], s[1] + p[1]]);
        return [s[0] / m as f64, s[1] / m as f64];
    }
    let mut c = [0.0, 0.0];
    for k in 0..m {
        let (p, q) = (v[k], v[(k + 1) % m]);
        let w = cross(p, q);
        c[0] += (p[0] + q[0]) * w;
        c[1] += (p[1] + q[1]) * w;
    }
    [c[0] / (6.0 * a), c[1] / (6.0 * a)]
}

/// What lies across an edge of a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeLabel {
    /// Boundary of the support.
    Support,
    /// Interface with the cell of this site.
    Site(usize),
}

/// Convex cell; edge `k` runs from vertex `k` to vertex `k + 1` and carries `labels[k]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Cell {
    pub vertices: Vec<Point>,
    pub labels: Vec<EdgeLabel>,
}

impl Cell {
    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn area(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            signed_area(&self.vertices)
        }
    }

    /// Edges as `(start, end, label)`.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point, EdgeLabel)> + '_ {
        let m = self.vertices.len();
        (0..m).map(move |k| (self.vertices[k], self.vertices[(k + 1) % m], self.labels[k]))
    }

    /// Keeps the part where `dot(a, x) <= c`; the new edge is labeled `label`.
    fn clip(&mut self, a: Point, c: f64, label: EdgeLabel) {
        let m = self.vertices.len();
        if m == 0 {
            return;
        }
        let vals: Vec<f64> = self.vertices.iter().map(|v| dot(a, *v) - c).collect();
        if vals.iter().all(|v| *v <= 0.0) {
            return;
        }
        let mut verts = Vec::with_capacity(m + 1);
        let mut labs = Vec::with_capacity(m + 1);
        for k in 0..m {
            let (p, q) = (self.vertices[k], self.vertices[(k + 1) % m]);
            let (dp, dq) = (vals[k], vals[(k + 1) % m]);
            let lab = self.labels[k];
            if dp <= 0.0 {
                verts.push(p);
                labs.push(lab);
                if dq > 0.0 {
                    verts.push(lerp(p, q, dp / (dp - dq)));
                    labs.push(label);
                }
            } else if dq <= 0.0 {
                verts.push(lerp(p, q, dp / (dp - dq)));
                labs.push(lab);
            }
        }
        self.vertices = verts;
        self.labels = labs;
        self.cleanup();
    }

    /// Drops zero-length edges and collapses degenerate cells.
    fn cleanup(&mut self) {
        let scale = self.vertices.iter().map(|v| norm2(*v)).fold(1.0, f64::max).sqrt();
        let tol = 1e-14 * scale;
        let mut k = 0;
        while self.vertices.len() >= 2 && k < self.vertices.len() {
            let next = (k + 1) % self.vertices.len();
            if norm2(sub(self.vertices[k], self.vertices[next])).sqrt() <= tol {
                self.vertices.remove(k);
                self.labels.remove(k);
            } else {
                k += 1;
            }
        }
        if self.vertices.len() < 3 || signed_area(&self.vertices) <= 1e-28 * scale * scale {
            self.vertices.clear();
            self.labels.clear();
        }
    }
}

fn lerp(p: Point, q: Point, t: f64) -> Point {
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

/// Laguerre cells of weighted sites clipped to a convex support. The cell of
/// site `i` is where `‖x - x_i‖² - b_i` is smallest.
#[derive(Clone, Debug)]
pub struct PowerDiagram {
    pub sites: Vec<Point>,
    pub weights: Vec<f64>,
    pub cells: Vec<Cell>,
}

impl PowerDiagram {
    pub fn n(&self) -> usize {
        self.sites.len()
    }

    /// Site of the cell containing `x` (smallest shifted cost, lowest index on ties).
    pub fn owner(&self, x: Point) -> usize {
        let mut best = 0;
        let mut best_cost = f64::INFINITY;
        for (i, (s, b)) in self.sites.iter().zip(&self.weights).enumerate() {
            let c = norm2(sub(x, *s)) - b;
            if c < best_cost {
                best_cost = c;
                best = i;
            }
        }
        best
    }
}

/// Errors on coincident or non-finite sites.
pub(crate) fn check_sites(sites: &[Point]) -> Result<()> {
    if sites.is_empty() {
        return Err(Error::Config("at least one site is required".into()));
    }
    if sites.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite site coordinates".into()));
    }
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by(|&a, &b| sites[a].partial_cmp(&sites[b]).expect("finite"));
    for w in order.windows(2) {
        if sites[w[0]] == sites[w[1]] {
            let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(Error::DegenerateSites { first, second });
        }
    }
    Ok(())
}

/// Builds the power diagram by clipping the support against the bisector
/// half-planes `2xᵀ(x_j - x_i) ≤ ‖x_j‖² - ‖x_i‖² + b_i - b_j`.
///
/// Neighbours are visited by increasing distance and the scan stops once no
/// remaining bisector can reach the current cell.
pub fn build_power_diagram(support: &ConvexPolygon, sites: &[Point], weights: &[f64]) -> Result<PowerDiagram> {
    check_sites(sites)?;
    if weights.len() != sites.len() {
        return Err(Error::Config(format!("{} sites but {} weights", sites.len(), weights.len())));
    }
    let n = sites.len();
    let bmax = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut cells = Vec::with_capacity(n);
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        let xi = sites[i];
        let mut cell = Cell {
            vertices: support.vertices().to_vec(),
            labels: vec![EdgeLabel::Support; support.vertices().len()],
        };
        order.clear();
        order.extend((0..n).filter(|&j| j != i).map(|j| (norm2(sub(sites[j], xi)), j)));
        order.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        let slack = (bmax - weights[i]).max(0.0);
        for &(d2, j) in &order {
            if cell.is_empty() {
                break;
            }
            let radius = cell.vertices.iter().map(|v| norm2(sub(*v, xi))).fold(0.0, f64::max).sqrt();
            let d = d2.sqrt();
            if (d2 - slack) / (2.0 * d) > radius * (1.0 + 1e-12) + 1e-300 {
                break;
            }
            let xj = sites[j];
            let a = [2.0 * (xj[0] - xi[0]), 2.0 * (xj[1] - xi[1])];
            let c = norm2(xj) - norm2(xi) + weights[i] - weights[j];
            cell.clip(a, c, EdgeLabel::Site(j));
        }
        cells.push(cell);
    }
    Ok(PowerDiagram {
        sites: sites.to_vec(),
        weights: weights.to_vec(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_owns_the_support() {
        let sq = ConvexPolygon::unit_square();
        let pd = build_power_diagram(&sq, &[[0.3, 0.7]], &[0.0]).unwrap();
        assert!((pd.cells[0].area() - 1.0).abs() < 1e-15);
        assert!(pd.cells[0].labels.iter().all(|l| *l == EdgeLabel::Support));
    }

    #[test]
    fn four_symmetric_sites_give_quadrants() {
        let sq = ConvexPolygon::unit_square();
        let sites = [[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]];
        let pd = build_power_diagram(&sq, &sites, &[0.0; 4]).unwrap();
        for (i, cell) in pd.cells.iter().enumerate() {
            assert!((cell.area() - 0.25).abs() < 1e-15);
            let c = polygon_centroid(&cell.vertices);
            assert!((c[0] - sites[i][0]).abs() < 1e-14 && (c[1] - sites[i][1]).abs() < 1e-14);
            let neighbours = cell.labels.iter().filter(|l| matches!(l, EdgeLabel::Site(_))).count();
            assert_eq!(neighbours, 2);
        }
    }

    #[test]
    fn large_weight_gap_empties_a_cell() {
        let sq = ConvexPolygon::unit_square();
        // site 1 dominates everywhere once b_1 - b_0 exceeds the largest cost gap
        let pd = build_power_diagram(&sq, &[[0.25, 0.5], [0.75, 0.5]], &[-1.0, 1.0]).unwrap();
        assert!(pd.cells[0].is_empty());
        assert!((pd.cells[1].area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn duplicate_sites_are_rejected() {
        let sq = ConvexPolygon::unit_square();
        let err = build_power_diagram(&sq, &[[0.1, 0.1], [0.5, 0.5], [0.1, 0.1]], &[0.0; 3]).unwrap_err();
        assert!(matches!(err, Error::DegenerateSites { first: 0, second: 2 }));
    }

    #[test]
    fn polygon_validation() {
        assert!(ConvexPolygon::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        assert!(ConvexPolygon::new(vec![[0.0, 0.0], [2.0, 0.0], [1.0, 0.2], [1.0, 2.0]]).is_err());
        let cw = ConvexPolygon::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(cw.area() > 0.0);
    }
}
