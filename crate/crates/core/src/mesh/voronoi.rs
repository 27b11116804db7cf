//! Centroidal Voronoi meshes of the unit square.
//!
//! Cells are computed independently by clipping the square against the
//! bisector half-planes of nearby seeds, then welded into a conforming mesh.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_mesh, polygon_centroid, signed_area, PolygonalMesh, Vec2};
use crate::error::{Result, VemError};

/// Relative (to the mean seed spacing) distance below which cell vertices
/// are merged.
const WELD_FRACTION: f64 = 1e-3;
const MAX_RESAMPLES: usize = 8;

/// Clipped Voronoi diagram of `n_seeds` uniformly drawn seeds after
/// `lloyd_iters` Lloyd relaxation steps. Deterministic for fixed inputs.
pub fn generate_voronoi_mesh(n_seeds: usize, lloyd_iters: usize, rng_seed: u64) -> Result<PolygonalMesh> {
    if n_seeds < 4 {
        return Err(VemError::InvalidInput(format!("Voronoi mesh needs >= 4 seeds, got {n_seeds}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let seeds: Vec<Vec2> = (0..n_seeds)
        .map(|_| Vec2::new(rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    relax_and_build(seeds, lloyd_iters, &mut rng)
}

/// Voronoi mesh from explicit seeds (all strictly inside the square).
pub fn voronoi_mesh_from_seeds(seeds: Vec<Vec2>, lloyd_iters: usize) -> Result<PolygonalMesh> {
    if seeds.len() < 4 {
        return Err(VemError::InvalidInput(format!("Voronoi mesh needs >= 4 seeds, got {}", seeds.len())));
    }
    if seeds.iter().any(|s| !(s.x > 0.0 && s.x < 1.0 && s.y > 0.0 && s.y < 1.0)) {
        return Err(VemError::InvalidInput("Voronoi seeds must lie inside (0,1)^2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    relax_and_build(seeds, lloyd_iters, &mut rng)
}

fn relax_and_build(mut seeds: Vec<Vec2>, lloyd_iters: usize, rng: &mut ChaCha8Rng) -> Result<PolygonalMesh> {
    let spacing = 1.0 / (seeds.len() as f64).sqrt();
    let mut attempt = 0;
    loop {
        separate_close_seeds(&mut seeds, 1e-8 * spacing, rng);
        for _ in 0..lloyd_iters {
            let cells = voronoi_cells(&seeds);
            for (s, cell) in seeds.iter_mut().zip(&cells) {
                *s = polygon_centroid(cell);
            }
        }
        let cells = voronoi_cells(&seeds);
        match weld(&cells, WELD_FRACTION * spacing).and_then(|(v, p)| build_mesh(v, p)) {
            Ok(mesh) => return Ok(mesh),
            Err(e) if attempt < MAX_RESAMPLES => {
                log::warn!("degenerate Voronoi configuration ({e}); perturbing seeds");
                attempt += 1;
                for s in seeds.iter_mut() {
                    let d = Vec2::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * (0.05 * spacing);
                    *s = (*s + d).map(|c| c.clamp(1e-6, 1.0 - 1e-6));
                }
            }
            Err(e) => return Err(e),
        }
    }
}

fn separate_close_seeds(seeds: &mut [Vec2], tol: f64, rng: &mut ChaCha8Rng) {
    let grid = SeedGrid::new(seeds);
    let mut moved = false;
    for i in 0..seeds.len() {
        for j in grid.near(seeds[i], 0) {
            if j < i && (seeds[j] - seeds[i]).norm() <= tol {
                let d = Vec2::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * (1e3 * tol);
                seeds[i] = (seeds[i] + d).map(|c| c.clamp(1e-6, 1.0 - 1e-6));
                moved = true;
            }
        }
    }
    if moved {
        log::warn!("coincident Voronoi seeds were perturbed");
    }
}

/// Uniform bucket grid over the unit square for neighbour queries.
struct SeedGrid {
    g: usize,
    buckets: Vec<Vec<usize>>,
}

impl SeedGrid {
    fn new(seeds: &[Vec2]) -> Self {
        let g = ((seeds.len() as f64).sqrt().ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); g * g];
        let grid = Self { g, buckets: Vec::new() };
        for (i, s) in seeds.iter().enumerate() {
            let (bx, by) = grid.bucket(*s);
            buckets[by * g + bx].push(i);
        }
        Self { g, buckets }
    }

    fn bucket(&self, p: Vec2) -> (usize, usize) {
        let f = |c: f64| ((c * self.g as f64).floor().max(0.0) as usize).min(self.g - 1);
        (f(p.x), f(p.y))
    }

    fn cell_size(&self) -> f64 {
        1.0 / self.g as f64
    }

    /// Indices of seeds in buckets at Chebyshev ring distance exactly `ring`.
    fn near(&self, p: Vec2, ring: usize) -> Vec<usize> {
        let (bx, by) = self.bucket(p);
        let r = ring as isize;
        let mut out = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if dx.abs().max(dy.abs()) != r {
                    continue;
                }
                let (x, y) = (bx as isize + dx, by as isize + dy);
                if x < 0 || y < 0 || x >= self.g as isize || y >= self.g as isize {
                    continue;
                }
                out.extend_from_slice(&self.buckets[y as usize * self.g + x as usize]);
            }
        }
        out
    }
}

/// Keeps the part of `poly` on the side of the bisector closer to `a`.
fn clip_bisector(poly: &[Vec2], a: Vec2, b: Vec2) -> Vec<Vec2> {
    let m = (a + b) * 0.5;
    let d = b - a;
    let side = |p: &Vec2| (p - m).dot(&d);
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let (sp, sq) = (side(&p), side(&q));
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push(p + (q - p) * t);
        }
    }
    out
}

pub(crate) fn voronoi_cells(seeds: &[Vec2]) -> Vec<Vec<Vec2>> {
    let grid = SeedGrid::new(seeds);
    let square = vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(0.0, 1.0),
    ];
    seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut cell = square.clone();
            let mut ring = 0;
            loop {
                let radius = cell.iter().map(|p| (p - s).norm()).fold(0.0, f64::max);
                if ring > 0 && (ring as f64 - 1.0) * grid.cell_size() > 2.0 * radius {
                    break;
                }
                if ring > grid.g {
                    break;
                }
                let mut nbrs = grid.near(s, ring);
                nbrs.sort_by(|&a, &b| (seeds[a] - s).norm_squared().total_cmp(&(seeds[b] - s).norm_squared()));
                for j in nbrs {
                    if j != i {
                        cell = clip_bisector(&cell, s, seeds[j]);
                    }
                }
                ring += 1;
            }
            cell
        })
        .collect()
}

fn boundary_rank(p: Vec2) -> u8 {
    let tol = 1e-12;
    let on_x = p.x.abs() <= tol || (p.x - 1.0).abs() <= tol;
    let on_y = p.y.abs() <= tol || (p.y - 1.0).abs() <= tol;
    on_x as u8 + on_y as u8
}

/// Merges cell vertices closer than `tol` into shared mesh vertices.
///
/// Corners are inserted first, then other boundary points, so merged
/// clusters keep their boundary position.
fn weld(cells: &[Vec<Vec2>], tol: f64) -> Result<(Vec<Vec2>, Vec<Vec<usize>>)> {
    let mut order: Vec<(usize, usize)> = cells
        .iter()
        .enumerate()
        .flat_map(|(c, cell)| (0..cell.len()).map(move |k| (c, k)))
        .collect();
    // stable: ties keep cell order, so numbering is deterministic
    order.sort_by_key(|&(c, k)| std::cmp::Reverse(boundary_rank(cells[c][k])));

    let key = |p: Vec2| ((p.x / tol).floor() as i64, (p.y / tol).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut reps: Vec<Vec2> = Vec::new();
    let mut assign: Vec<Vec<usize>> = cells.iter().map(|c| vec![usize::MAX; c.len()]).collect();
    for (c, k) in order {
        let p = cells[c][k];
        let (kx, ky) = key(p);
        let mut found = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = buckets.get(&(kx + dx, ky + dy)) {
                    for &r in list {
                        if (reps[r] - p).norm() <= tol {
                            found = Some(r);
                            break 'search;
                        }
                    }
                }
            }
        }
        let r = found.unwrap_or_else(|| {
            reps.push(p);
            buckets.entry((kx, ky)).or_default().push(reps.len() - 1);
            reps.len() - 1
        });
        assign[c][k] = r;
    }

    // renumber by first use in cell order
    let mut renumber = vec![usize::MAX; reps.len()];
    let mut vertices = Vec::with_capacity(reps.len());
    let mut polygons = Vec::with_capacity(cells.len());
    for (c, ids) in assign.iter().enumerate() {
        let mut poly: Vec<usize> = Vec::with_capacity(ids.len());
        for &r in ids {
            if renumber[r] == usize::MAX {
                renumber[r] = vertices.len();
                vertices.push(reps[r]);
            }
            let v = renumber[r];
            if poly.last() != Some(&v) {
                poly.push(v);
            }
        }
        while poly.len() > 1 && poly.first() == poly.last() {
            poly.pop();
        }
        let pts: Vec<Vec2> = poly.iter().map(|&v| vertices[v]).collect();
        if poly.len() < 3 || signed_area(&pts) <= 0.0 {
            return Err(VemError::DegeneratePolygon {
                polygon: c,
                reason: "Voronoi cell collapsed during welding".into(),
            });
        }
        polygons.push(poly);
    }
    Ok((vertices, polygons))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_square_mesh, write_mesh};

    fn is_convex(points: &[Vec2]) -> bool {
        let n = points.len();
        (0..n).all(|i| {
            let (a, b, c) = (points[i], points[(i + 1) % n], points[(i + 2) % n]);
            let (u, v) = (b - a, c - b);
            u.x * v.y - u.y * v.x >= -1e-12
        })
    }

    #[test]
    fn sixteen_seeds_cover_square() {
        let m = generate_voronoi_mesh(16, 100, 7).unwrap();
        assert_eq!(m.num_polygons(), 16);
        let total: f64 = (0..16).map(|k| m.polygon_area(k)).sum();
        assert!((total - 1.0).abs() < 1e-10);
        for k in 0..16 {
            assert!(is_convex(&m.polygon_points(k)));
        }
    }

    #[test]
    fn quadrant_seeds_give_square_mesh() {
        let seeds = vec![
            Vec2::new(0.25, 0.25),
            Vec2::new(0.75, 0.25),
            Vec2::new(0.25, 0.75),
            Vec2::new(0.75, 0.75),
        ];
        let m = voronoi_mesh_from_seeds(seeds, 0).unwrap();
        let reference = generate_square_mesh(2).unwrap();
        let canon = |mesh: &PolygonalMesh| {
            let mut polys: Vec<Vec<(u64, u64)>> = (0..mesh.num_polygons())
                .map(|k| {
                    let mut p: Vec<(u64, u64)> =
                        mesh.polygon_points(k).iter().map(|q| (q.x.to_bits(), q.y.to_bits())).collect();
                    p.sort();
                    p
                })
                .collect();
            polys.sort();
            polys
        };
        assert_eq!(canon(&m), canon(&reference));
        assert_eq!(m.num_interior_edges(), 4);
    }

    #[test]
    fn deterministic_bytes() {
        let write = || {
            let mut buf = Vec::new();
            write_mesh(&generate_voronoi_mesh(40, 20, 3).unwrap(), &mut buf).unwrap();
            buf
        };
        assert_eq!(write(), write());
    }

    #[test]
    fn too_few_seeds() {
        assert!(generate_voronoi_mesh(3, 0, 1).is_err());
    }

    #[test]
    fn coincident_seeds_are_separated() {
        let seeds = vec![
            Vec2::new(0.2, 0.2),
            Vec2::new(0.2, 0.2),
            Vec2::new(0.8, 0.3),
            Vec2::new(0.4, 0.8),
            Vec2::new(0.7, 0.7),
        ];
        let m = voronoi_mesh_from_seeds(seeds, 5).unwrap();
        assert_eq!(m.num_polygons(), 5);
    }

    #[test]
    fn cells_match_brute_force_clipping() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let seeds: Vec<Vec2> = (0..60).map(|_| Vec2::new(rng.random(), rng.random())).collect();
        let fast = voronoi_cells(&seeds);
        let square = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        for (i, s) in seeds.iter().enumerate() {
            let mut cell = square.clone();
            for (j, t) in seeds.iter().enumerate() {
                if i != j {
                    cell = clip_bisector(&cell, *s, *t);
                }
            }
            assert!((signed_area(&cell) - signed_area(&fast[i])).abs() < 1e-13);
        }
    }
}
