use super::{PolygonalMesh, Vec2};
use crate::error::{Result, VemError};
use crate::geometry::ElementGeometry;

/// Edges shorter than this fraction of the element diameter are degenerate.
const MIN_EDGE_FRACTION: f64 = 1e-8;
/// Fan triangles with area below this fraction of `h_K²` are degenerate.
const MIN_FAN_FRACTION: f64 = 1e-12;

/// Shape-regularity quantities of a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshQualityReport {
    /// `min_K min_{e ⊂ ∂K} |e| / h_K`.
    pub min_edge_ratio: f64,
    /// `min_K dist(x_K, ∂K) / h_K`, the radius of the largest ball centred
    /// at the star centre, relative to the diameter.
    pub rho: f64,
    pub max_edges: usize,
    /// Smallest interior angle of the fan sub-triangles, in degrees.
    pub min_angle_deg: f64,
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let t = ((p - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

fn triangle_min_angle(t: &[Vec2; 3]) -> f64 {
    (0..3)
        .map(|i| {
            let (a, b, c) = (t[i], t[(i + 1) % 3], t[(i + 2) % 3]);
            let (u, v) = (b - a, c - a);
            (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos().to_degrees()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Computes the regularity report, rejecting meshes with a degenerate edge
/// or fan triangle, or an element that is not star-shaped with respect to
/// its star centre.
pub fn validate_mesh(mesh: &PolygonalMesh) -> Result<MeshQualityReport> {
    let mut report = MeshQualityReport {
        min_edge_ratio: f64::INFINITY,
        rho: f64::INFINITY,
        max_edges: 0,
        min_angle_deg: f64::INFINITY,
    };
    for k in 0..mesh.num_polygons() {
        let geo = ElementGeometry::from_mesh(mesh, k).map_err(|e| VemError::Regularity {
            element: k,
            reason: e.to_string(),
        })?;
        let hk = geo.diameter;
        report.max_edges = report.max_edges.max(geo.num_edges());
        for (i, e) in geo.edges.iter().enumerate() {
            let ratio = e.length / hk;
            if ratio < MIN_EDGE_FRACTION {
                return Err(VemError::Regularity {
                    element: k,
                    reason: format!("edge {i} is degenerate (|e|/h_K = {ratio:e})"),
                });
            }
            report.min_edge_ratio = report.min_edge_ratio.min(ratio);
            let d = point_segment_distance(geo.star_center, e.segment.start, e.segment.end);
            report.rho = report.rho.min(d / hk);
        }
        for (i, t) in geo.sub_triangles().enumerate() {
            let area = super::signed_area(&t);
            if area <= MIN_FAN_FRACTION * hk * hk {
                return Err(VemError::Regularity {
                    element: k,
                    reason: format!("fan triangle {i} is degenerate or inverted (area {area:e}); not star-shaped"),
                });
            }
            report.min_angle_deg = report.min_angle_deg.min(triangle_min_angle(&t));
        }
    }
    Ok(report)
}
