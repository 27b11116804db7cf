//! Element geometry, quadrature and the scaled local P1 basis.

use crate::error::{Result, VemError};
use crate::mesh::{diameter, polygon_centroid, signed_area, PolygonalMesh, Vec2};

pub const MAX_TRIANGLE_DEGREE: usize = 7;
pub const MAX_EDGE_POINTS: usize = 8;

/// Fan triangles smaller than this fraction of the element area disqualify
/// the vertex mean as star centre.
const FAN_DEGENERACY: f64 = 1e-6;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Quadrature on the reference triangle `(0,0), (1,0), (0,1)`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// Rule exact for polynomials of total degree `degree` (≤ 7).
    ///
    /// Degrees up to 2 use the symmetric three-point rule; higher degrees a
    /// collapsed Gauss product rule.
    pub fn triangle(degree: usize) -> Result<Self> {
        if degree > MAX_TRIANGLE_DEGREE {
            return Err(VemError::UnsupportedDegree(degree));
        }
        if degree <= 2 {
            let (a, b) = (1.0 / 6.0, 2.0 / 3.0);
            return Ok(Self {
                points: vec![[a, a], [b, a], [a, b]],
                weights: vec![1.0 / 6.0; 3],
                degree: 2,
            });
        }
        let n = (degree + 2).div_ceil(2);
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (xi, wi) in x.iter().zip(&w) {
            let u = 0.5 * (xi + 1.0);
            for (xj, wj) in x.iter().zip(&w) {
                let v = 0.5 * (xj + 1.0);
                points.push([u, v * (1.0 - u)]);
                weights.push(0.25 * wi * wj * (1.0 - u));
            }
        }
        Ok(Self {
            points,
            weights,
            degree,
        })
    }
}

/// Straight segment traversed from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Vec2,
    pub end: Vec2,
}

impl Segment {
    pub fn new(start: Vec2, end: Vec2) -> Self {
        Self { start, end }
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    pub fn midpoint(&self) -> Vec2 {
        (self.start + self.end) * 0.5
    }

    /// Point at normalised coordinate `xi ∈ [-1, 1]`.
    pub fn point(&self, xi: f64) -> Vec2 {
        self.midpoint() + (self.end - self.start) * (0.5 * xi)
    }

    pub fn reversed(&self) -> Self {
        Self::new(self.end, self.start)
    }
}

/// `∫_e g ds` with a Gauss–Legendre rule exact to `degree` (≤ 15).
pub fn edge_integrate<F: Fn(Vec2) -> f64>(seg: &Segment, g: F, degree: usize) -> Result<f64> {
    let n = (degree + 2) / 2;
    if n > MAX_EDGE_POINTS {
        return Err(VemError::UnsupportedDegree(degree));
    }
    let (x, w) = gauss_legendre(n.max(1));
    let half = 0.5 * seg.length();
    Ok(x.iter().zip(&w).map(|(xi, wi)| wi * g(seg.point(*xi))).sum::<f64>() * half)
}

/// `((1/|e|)∫_e v ds, (1/|e|)∫_e v ξ ds)` with `ξ ∈ [-1,1]` running from
/// `start` to `end`, by the 8-point rule. The pair fixes the L² projection
/// of `v` onto `P_1(e)`: `π_e v = m0 + 3 m1 ξ`.
pub fn p1_edge_moments<F: Fn(Vec2) -> f64>(seg: &Segment, v: F) -> (f64, f64) {
    let (x, w) = gauss_legendre(MAX_EDGE_POINTS);
    let mut m0 = 0.0;
    let mut m1 = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        let val = v(seg.point(*xi));
        m0 += wi * val;
        m1 += wi * val * xi;
    }
    (0.5 * m0, 0.5 * m1)
}

#[derive(Debug, Clone, Copy)]
pub struct EdgeGeometry {
    pub segment: Segment,
    pub length: f64,
    /// Outward unit normal of the element.
    pub normal: Vec2,
    /// Counterclockwise unit tangent.
    pub tangent: Vec2,
}

/// Per-polygon derived data. Local edge `i` runs from vertex `i` to `i + 1`.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub vertices: Vec<Vec2>,
    pub edges: Vec<EdgeGeometry>,
    pub area: f64,
    pub centroid: Vec2,
    /// Apex of the triangular fan `T^K`.
    pub star_center: Vec2,
    pub diameter: f64,
}

fn fan_min_area(points: &[Vec2], c: Vec2) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| signed_area(&[c, points[i], points[(i + 1) % n]]))
        .fold(f64::INFINITY, f64::min)
}

impl ElementGeometry {
    /// Geometry of a counterclockwise polygon.
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(VemError::InvalidInput("element needs at least 3 vertices".into()));
        }
        let area = signed_area(&vertices);
        let diam = diameter(&vertices);
        if !(area > 0.0) {
            return Err(VemError::InvalidInput(format!("element area {area:e} is not positive")));
        }
        let mut edges = Vec::with_capacity(n);
        for i in 0..n {
            let segment = Segment::new(vertices[i], vertices[(i + 1) % n]);
            let length = segment.length();
            if length == 0.0 {
                return Err(VemError::InvalidInput(format!("edge {i} has zero length")));
            }
            let tangent = (segment.end - segment.start) / length;
            edges.push(EdgeGeometry {
                segment,
                length,
                normal: Vec2::new(tangent.y, -tangent.x),
                tangent,
            });
        }
        let centroid = polygon_centroid(&vertices);
        let mean = vertices.iter().sum::<Vec2>() / n as f64;
        let star_center = if fan_min_area(&vertices, mean) > FAN_DEGENERACY * area {
            mean
        } else {
            centroid
        };
        Ok(Self {
            vertices,
            edges,
            area,
            centroid,
            star_center,
            diameter: diam,
        })
    }

    pub fn from_mesh(mesh: &PolygonalMesh, k: usize) -> Result<Self> {
        Self::new(mesh.polygon_points(k))
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Triangles of the fan from the star centre, counterclockwise.
    pub fn sub_triangles(&self) -> impl Iterator<Item = [Vec2; 3]> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| [self.star_center, self.vertices[i], self.vertices[(i + 1) % n]])
    }

    pub fn basis(&self) -> ScaledP1Basis {
        ScaledP1Basis {
            center: self.centroid,
            h: self.diameter,
        }
    }
}

/// `∫_K f` summed over the fan triangles, exact for polynomials of the
/// requested degree.
pub fn polygon_integrate<F: Fn(Vec2) -> f64>(k: &ElementGeometry, f: F, degree: usize) -> Result<f64> {
    let rule = QuadratureRule::triangle(degree)?;
    let mut sum = 0.0;
    for [a, b, c] in k.sub_triangles() {
        let (e1, e2) = (b - a, c - a);
        let jac = e1.x * e2.y - e1.y * e2.x;
        let s: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * f(a + e1 * p[0] + e2 * p[1]))
            .sum();
        sum += s * jac;
    }
    Ok(sum)
}

/// Same as [`polygon_integrate`] for vector-valued integrands.
pub fn polygon_integrate_vec<F: Fn(Vec2) -> Vec2>(k: &ElementGeometry, f: F, degree: usize) -> Result<Vec2> {
    let rule = QuadratureRule::triangle(degree)?;
    let mut sum = Vec2::zeros();
    for [a, b, c] in k.sub_triangles() {
        let (e1, e2) = (b - a, c - a);
        let jac = e1.x * e2.y - e1.y * e2.x;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            sum += f(a + e1 * p[0] + e2 * p[1]) * (w * jac);
        }
    }
    Ok(sum)
}

/// Scaled monomials `m_1 = 1`, `m_2 = (x − c_x)/h`, `m_3 = (y − c_y)/h`,
/// combined into the vector basis
/// `[m_1 e_1, m_2 e_1, m_3 e_1, m_1 e_2, m_2 e_2, m_3 e_2]`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledP1Basis {
    pub center: Vec2,
    pub h: f64,
}

pub type Tensor2 = [[f64; 2]; 2];

impl ScaledP1Basis {
    pub const DIM: usize = 6;

    pub fn monomials(&self, p: Vec2) -> [f64; 3] {
        [1.0, (p.x - self.center.x) / self.h, (p.y - self.center.y) / self.h]
    }

    pub fn value(&self, j: usize, p: Vec2) -> Vec2 {
        let m = self.monomials(p)[j % 3];
        if j < 3 {
            Vec2::new(m, 0.0)
        } else {
            Vec2::new(0.0, m)
        }
    }

    /// Constant gradient `∂_b (basis_j)_a` as `[a][b]`.
    pub fn gradient(&self, j: usize) -> Tensor2 {
        let mut g = [[0.0; 2]; 2];
        let comp = j / 3;
        match j % 3 {
            1 => g[comp][0] = 1.0 / self.h,
            2 => g[comp][1] = 1.0 / self.h,
            _ => {}
        }
        g
    }

    pub fn strain(&self, j: usize) -> Tensor2 {
        sym(&self.gradient(j))
    }

    pub fn rot(&self, j: usize) -> f64 {
        let g = self.gradient(j);
        g[1][0] - g[0][1]
    }

    pub fn div(&self, j: usize) -> f64 {
        let g = self.gradient(j);
        g[0][0] + g[1][1]
    }

    /// Coefficients of a linear field in this basis.
    pub fn coefficients(&self, q: &LinearField) -> [f64; 6] {
        let mut c = [0.0; 6];
        for comp in 0..2 {
            let [a0, ax, ay] = q.coeffs[comp];
            c[3 * comp] = a0 + ax * self.center.x + ay * self.center.y;
            c[3 * comp + 1] = ax * self.h;
            c[3 * comp + 2] = ay * self.h;
        }
        c
    }

    pub fn evaluate(&self, coeffs: &[f64], p: Vec2) -> Vec2 {
        (0..6).map(|j| self.value(j, p) * coeffs[j]).sum()
    }
}

pub fn sym(g: &Tensor2) -> Tensor2 {
    let off = 0.5 * (g[0][1] + g[1][0]);
    [[g[0][0], off], [off, g[1][1]]]
}

pub fn ddot(a: &Tensor2, b: &Tensor2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

pub fn tensor_apply(a: &Tensor2, v: Vec2) -> Vec2 {
    Vec2::new(a[0][0] * v.x + a[0][1] * v.y, a[1][0] * v.x + a[1][1] * v.y)
}

/// Vector field with affine components `q_c = a0 + ax x + ay y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearField {
    pub coeffs: [[f64; 3]; 2],
}

impl LinearField {
    pub fn new(first: [f64; 3], second: [f64; 3]) -> Self {
        Self {
            coeffs: [first, second],
        }
    }

    /// The six fields `(1,0), (x,0), (y,0), (0,1), (0,x), (0,y)`.
    pub fn monomial(j: usize) -> Self {
        let mut c = [[0.0; 3]; 2];
        c[j / 3][j % 3] = 1.0;
        Self { coeffs: c }
    }

    /// Infinitesimal rotation `(−y, x)`.
    pub fn rotation() -> Self {
        Self::new([0.0, 0.0, -1.0], [0.0, 1.0, 0.0])
    }

    pub fn value(&self, p: Vec2) -> Vec2 {
        let f = |c: &[f64; 3]| c[0] + c[1] * p.x + c[2] * p.y;
        Vec2::new(f(&self.coeffs[0]), f(&self.coeffs[1]))
    }

    pub fn gradient(&self) -> Tensor2 {
        [
            [self.coeffs[0][1], self.coeffs[0][2]],
            [self.coeffs[1][1], self.coeffs[1][2]],
        ]
    }

    pub fn strain(&self) -> Tensor2 {
        sym(&self.gradient())
    }

    pub fn div(&self) -> f64 {
        self.coeffs[0][1] + self.coeffs[1][2]
    }
}
