use super::{build_mesh, PolygonalMesh, Vec2};
use crate::error::{Result, VemError};

/// Offset of the two inner cut points from the cell centre, in cell widths.
pub const HEX_CUT_OFFSET: f64 = 0.125;

/// `n × n` axis-aligned squares of side `1/n`.
pub fn generate_square_mesh(n: usize) -> Result<PolygonalMesh> {
    if n == 0 {
        return Err(VemError::InvalidInput("square mesh needs n >= 1".into()));
    }
    let nf = n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Vec2::new(i as f64 / nf, j as f64 / nf));
        }
    }
    let mut polygons = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            polygons.push(vec![idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    build_mesh(vertices, polygons)
}

/// Tiling of the unit square by congruent nonconvex hexagons.
///
/// Each `1/n × 1/n` cell is cut along the zig-zag
/// `L → C − δ → C + δ → R`, where `L`, `R` are the midpoints of the left and
/// right cell sides, `C` the cell centre and `δ = (1/8, −1/8)/n`. The cut is
/// point-symmetric about `C`, so the lower and upper halves are congruent
/// hexagons with one reflex vertex each (`C + δ` for the lower half,
/// `C − δ` for the upper one). Side midpoints are shared with the
/// neighbouring cells.
pub fn generate_hex_mesh(n: usize) -> Result<PolygonalMesh> {
    if n == 0 {
        return Err(VemError::InvalidInput("hexagonal mesh needs n >= 1".into()));
    }
    let nf = n as f64;
    let corner = |i: usize, j: usize| j * (n + 1) + i;
    let n_corner = (n + 1) * (n + 1);
    let side_mid = |i: usize, j: usize| n_corner + j * (n + 1) + i;
    let n_mid = n * (n + 1);
    let inner = |i: usize, j: usize, which: usize| n_corner + n_mid + 2 * (j * n + i) + which;

    let mut vertices = Vec::with_capacity(n_corner + n_mid + 2 * n * n);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Vec2::new(i as f64 / nf, j as f64 / nf));
        }
    }
    for j in 0..n {
        for i in 0..=n {
            vertices.push(Vec2::new(i as f64 / nf, (j as f64 + 0.5) / nf));
        }
    }
    for j in 0..n {
        for i in 0..n {
            // which = 0: C + δ, which = 1: C − δ
            let (cx, cy) = (i as f64 + 0.5, j as f64 + 0.5);
            vertices.push(Vec2::new((cx + HEX_CUT_OFFSET) / nf, (cy - HEX_CUT_OFFSET) / nf));
            vertices.push(Vec2::new((cx - HEX_CUT_OFFSET) / nf, (cy + HEX_CUT_OFFSET) / nf));
        }
    }

    let mut polygons = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (l, r) = (side_mid(i, j), side_mid(i + 1, j));
            let (p, q) = (inner(i, j, 0), inner(i, j, 1));
            polygons.push(vec![corner(i, j), corner(i + 1, j), r, p, q, l]);
            polygons.push(vec![corner(i + 1, j + 1), corner(i, j + 1), l, q, p, r]);
        }
    }
    build_mesh(vertices, polygons)
}
