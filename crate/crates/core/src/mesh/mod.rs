//! Polygonal meshes of the unit square.
//!
//! Every edge carries a fixed global direction `a → b` with `a < b`. Its
//! unit normal `n_e` is that direction rotated by −90°, so the polygon on
//! the left of `a → b` (which traverses the edge forward) has outward normal
//! `n_K = n_e` and is the `+` side of jumps; the polygon on the right is the
//! `−` side.

mod family;
mod generate;
mod io;
mod quality;
mod voronoi;

use std::collections::HashMap;

use nalgebra::Vector2;

use crate::error::{Result, VemError};

pub use family::{MeshFamily, MeshSource, DEFAULT_LLOYD_ITERATIONS};
pub use generate::{generate_hex_mesh, generate_square_mesh, HEX_CUT_OFFSET};
pub use io::{read_mesh, write_mesh};
pub use quality::{validate_mesh, MeshQualityReport};
pub use voronoi::{generate_voronoi_mesh, voronoi_mesh_from_seeds};

pub type Vec2 = Vector2<f64>;

/// Vertices closer than this are considered duplicates.
pub const DUPLICATE_TOL: f64 = 1e-12;
/// Allowed defect between the summed polygon area and the unit square.
pub const AREA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// Endpoints with `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    /// Polygon traversing the edge `a → b` (outward normal `+n_e`).
    pub left: Option<usize>,
    /// Polygon traversing the edge `b → a` (outward normal `−n_e`).
    pub right: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.left.is_none() || self.right.is_none()
    }

    /// The single incident polygon of a boundary edge, or the left one.
    pub fn any_polygon(&self) -> usize {
        self.left.or(self.right).expect("edge without polygons")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalMesh {
    vertices: Vec<Vec2>,
    polygons: Vec<Vec<usize>>,
    polygon_edges: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    boundary_vertex: Vec<bool>,
    h: f64,
}

impl PolygonalMesh {
    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Vec2 {
        self.vertices[i]
    }

    pub fn polygons(&self) -> &[Vec<usize>] {
        &self.polygons
    }

    pub fn polygon(&self, k: usize) -> &[usize] {
        &self.polygons[k]
    }

    pub fn num_polygons(&self) -> usize {
        self.polygons.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    /// Global edge indices of polygon `k`; local edge `i` runs from local
    /// vertex `i` to `i + 1`.
    pub fn polygon_edges(&self, k: usize) -> &[usize] {
        &self.polygon_edges[k]
    }

    /// `+1` if local edge `i` of polygon `k` runs along the global edge
    /// direction, `−1` otherwise. Equals `n_e · n_K`.
    pub fn edge_sign(&self, k: usize, i: usize) -> f64 {
        let e = self.polygon_edges[k][i];
        if self.edges[e].left == Some(k) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| !self.edges[e].is_boundary())
    }

    pub fn num_interior_edges(&self) -> usize {
        self.interior_edges().count()
    }

    pub fn num_interior_vertices(&self) -> usize {
        self.boundary_vertex.iter().filter(|b| !**b).count()
    }

    /// Maximum polygon diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn polygon_points(&self, k: usize) -> Vec<Vec2> {
        self.polygons[k].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn polygon_area(&self, k: usize) -> f64 {
        signed_area(&self.polygon_points(k))
    }

    pub fn polygon_diameter(&self, k: usize) -> f64 {
        diameter(&self.polygon_points(k))
    }

    /// Unit normal `n_e` of the global edge direction.
    pub fn edge_normal(&self, e: usize) -> Vec2 {
        let [a, b] = self.edges[e].vertices;
        let d = (self.vertices[b] - self.vertices[a]).normalize();
        Vec2::new(d.y, -d.x)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        (self.vertices[b] - self.vertices[a]).norm()
    }
}

pub fn signed_area(points: &[Vec2]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let (p, q) = (points[i], points[(i + 1) % n]);
            p.x * q.y - q.x * p.y
        })
        .sum::<f64>()
        * 0.5
}

/// Area centroid of a simple polygon.
pub fn polygon_centroid(poly: &[Vec2]) -> Vec2 {
    let n = poly.len();
    let mut a = 0.0;
    let mut c = Vec2::zeros();
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let w = p.x * q.y - q.x * p.y;
        a += w;
        c += (p + q) * w;
    }
    c / (3.0 * a)
}

pub fn diameter(points: &[Vec2]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            d = d.max((p - q).norm());
        }
    }
    d
}

fn on_square_boundary(p: Vec2) -> [bool; 4] {
    let tol = 1e-12;
    [
        p.x.abs() <= tol,
        (p.x - 1.0).abs() <= tol,
        p.y.abs() <= tol,
        (p.y - 1.0).abs() <= tol,
    ]
}

fn check_duplicates(vertices: &[Vec2]) -> Result<()> {
    // bucket on a grid coarser than the tolerance, compare neighbouring buckets
    let cell = 1e-9;
    let key = |p: &Vec2| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in vertices.iter().enumerate() {
        let (kx, ky) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = buckets.get(&(kx + dx, ky + dy)) {
                    for &j in list {
                        let d = (vertices[j] - p).norm();
                        if d <= DUPLICATE_TOL {
                            return Err(VemError::DuplicateVertex {
                                first: j,
                                second: i,
                                distance: d,
                            });
                        }
                    }
                }
            }
        }
        buckets.entry((kx, ky)).or_default().push(i);
    }
    Ok(())
}

/// Derives connectivity from raw vertex and polygon arrays.
///
/// Clockwise polygons are reversed with a warning. The polygons must tile
/// `[0,1]²` conformingly: every edge is shared by at most two polygons with
/// opposite orientation, and unshared edges lie on the square boundary.
pub fn build_mesh(vertices: Vec<Vec2>, mut polygons: Vec<Vec<usize>>) -> Result<PolygonalMesh> {
    if polygons.is_empty() {
        return Err(VemError::InvalidInput("mesh has no polygons".into()));
    }
    for (i, p) in vertices.iter().enumerate() {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(VemError::InvalidInput(format!("vertex {i} is not finite")));
        }
        let tol = 1e-12;
        if p.x < -tol || p.x > 1.0 + tol || p.y < -tol || p.y > 1.0 + tol {
            return Err(VemError::Coverage(format!("vertex {i} = ({}, {}) lies outside [0,1]^2", p.x, p.y)));
        }
    }
    check_duplicates(&vertices)?;

    for (k, poly) in polygons.iter_mut().enumerate() {
        if poly.len() < 3 {
            return Err(VemError::DegeneratePolygon {
                polygon: k,
                reason: format!("{} vertices", poly.len()),
            });
        }
        if let Some(&v) = poly.iter().find(|&&v| v >= vertices.len()) {
            return Err(VemError::InvalidInput(format!("polygon {k} references missing vertex {v}")));
        }
        let mut sorted = poly.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(VemError::DegeneratePolygon {
                polygon: k,
                reason: "repeated vertex".into(),
            });
        }
        let pts: Vec<Vec2> = poly.iter().map(|&v| vertices[v]).collect();
        let area = signed_area(&pts);
        let d = diameter(&pts);
        if area.abs() <= 1e-14 * d * d {
            return Err(VemError::DegeneratePolygon {
                polygon: k,
                reason: format!("zero area ({area:e})"),
            });
        }
        if area < 0.0 {
            log::warn!("polygon {k} is clockwise; reversing");
            poly.reverse();
        }
    }

    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut polygon_edges = Vec::with_capacity(polygons.len());
    for (k, poly) in polygons.iter().enumerate() {
        let n = poly.len();
        let mut local = Vec::with_capacity(n);
        for i in 0..n {
            let (u, v) = (poly[i], poly[(i + 1) % n]);
            let key = (u.min(v), u.max(v));
            let e = *edge_index.entry(key).or_insert_with(|| {
                edges.push(Edge {
                    vertices: [key.0, key.1],
                    left: None,
                    right: None,
                });
                edges.len() - 1
            });
            let slot = if u < v { &mut edges[e].left } else { &mut edges[e].right };
            if slot.is_some() {
                return Err(VemError::NonManifoldEdge { a: key.0, b: key.1 });
            }
            *slot = Some(k);
            local.push(e);
        }
        polygon_edges.push(local);
    }

    let mut boundary_vertex = vec![false; vertices.len()];
    let mut used = vec![false; vertices.len()];
    for poly in &polygons {
        for &v in poly {
            used[v] = true;
        }
    }
    if let Some(v) = used.iter().position(|u| !u) {
        return Err(VemError::InvalidInput(format!("vertex {v} is not used by any polygon")));
    }
    for edge in edges.iter().filter(|e| e.is_boundary()) {
        let [a, b] = edge.vertices;
        let (fa, fb) = (on_square_boundary(vertices[a]), on_square_boundary(vertices[b]));
        if !(0..4).any(|s| fa[s] && fb[s]) {
            return Err(VemError::Coverage(format!(
                "unshared edge ({a}, {b}) is not on the boundary of the unit square (hanging vertex or gap)"
            )));
        }
        boundary_vertex[a] = true;
        boundary_vertex[b] = true;
    }

    let total: f64 = polygons
        .iter()
        .map(|p| signed_area(&p.iter().map(|&v| vertices[v]).collect::<Vec<_>>()))
        .sum();
    if (total - 1.0).abs() > AREA_TOL {
        return Err(VemError::Coverage(format!("total polygon area {total} differs from 1")));
    }

    let h = polygons
        .iter()
        .map(|p| diameter(&p.iter().map(|&v| vertices[v]).collect::<Vec<_>>()))
        .fold(0.0, f64::max);

    Ok(PolygonalMesh {
        vertices,
        polygons,
        polygon_edges,
        edges,
        boundary_vertex,
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> PolygonalMesh {
        let v = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        build_mesh(v, vec![vec![0, 1, 2, 3]]).unwrap()
    }

    #[test]
    fn single_square() {
        let m = unit_square();
        assert_eq!(m.num_polygons(), 1);
        assert_eq!(m.edges().len(), 4);
        assert!(m.edges().iter().all(|e| e.is_boundary()));
        assert_eq!(m.num_interior_edges(), 0);
        assert!((m.h() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn clockwise_polygon_is_reversed() {
        let v = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        let m = build_mesh(v, vec![vec![3, 2, 1, 0]]).unwrap();
        assert!(m.polygon_area(0) > 0.0);
    }

    #[test]
    fn non_manifold_edge_rejected() {
        // three triangles hanging off the edge (0,1)
        let v = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.5, 0.5),
            Vec2::new(0.5, 1.0),
            Vec2::new(0.3, 0.2),
        ];
        let err = build_mesh(v, vec![vec![0, 1, 2], vec![1, 0, 3], vec![0, 1, 4]]).unwrap_err();
        assert!(matches!(err, VemError::NonManifoldEdge { a: 0, b: 1 }));
    }

    #[test]
    fn duplicate_vertices_rejected() {
        let v = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 1.0 + 1e-13),
        ];
        let err = build_mesh(v, vec![vec![0, 1, 2, 3]]).unwrap_err();
        assert!(matches!(err, VemError::DuplicateVertex { first: 2, second: 4, .. }));
    }

    #[test]
    fn gap_rejected() {
        let v = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0)];
        assert!(matches!(build_mesh(v, vec![vec![0, 1, 2]]), Err(VemError::Coverage(_))));
    }

    #[test]
    fn edge_orientation_and_signs() {
        let m = generate_square_mesh(2).unwrap();
        for e in m.interior_edges() {
            let edge = m.edge(e);
            assert!(edge.vertices[0] < edge.vertices[1]);
            let (kp, km) = (edge.left.unwrap(), edge.right.unwrap());
            let ip = m.polygon_edges(kp).iter().position(|&x| x == e).unwrap();
            let im = m.polygon_edges(km).iter().position(|&x| x == e).unwrap();
            assert_eq!(m.edge_sign(kp, ip) + m.edge_sign(km, im), 0.0);
            assert_eq!(m.edge_sign(kp, ip), 1.0);
        }
    }
}
