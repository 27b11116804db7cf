//! Smooth test case on the unit square with homogeneous Dirichlet data.
//!
//! `u = w + c v` with `c = 1/(1+λ)`, a divergence-free part
//! `w = ((cos 2πx − 1) sin 2πy, −(cos 2πy − 1) sin 2πx)` and
//! `v = (sin 2πx sin 2πy, x(1−x)y(1−y))`. The load is
//! `f = −μ Δu − (μ+λ) ∇ div u`, in which λ only enters through `(μ+λ)c`.

use std::f64::consts::PI;

use crate::mesh::Vec2;

/// Divergence-free part `w`.
pub fn curl_part(p: Vec2) -> Vec2 {
    let (sx, sy) = ((2.0 * PI * p.x).sin(), (2.0 * PI * p.y).sin());
    let (cx, cy) = ((2.0 * PI * p.x).cos(), (2.0 * PI * p.y).cos());
    Vec2::new((cx - 1.0) * sy, -(cy - 1.0) * sx)
}

/// Part `v` scaled by `1/(1+λ)` in the solution.
pub fn compressible_part(p: Vec2) -> Vec2 {
    let (x, y) = (p.x, p.y);
    Vec2::new(
        (2.0 * PI * x).sin() * (2.0 * PI * y).sin(),
        x * (1.0 - x) * y * (1.0 - y),
    )
}

pub fn exact_solution(p: Vec2, lambda: f64) -> Vec2 {
    curl_part(p) + compressible_part(p) / (1.0 + lambda)
}

/// Gradient `∂_b u_a` as `[a][b]`.
pub fn exact_gradient(p: Vec2, lambda: f64) -> [[f64; 2]; 2] {
    let (x, y) = (p.x, p.y);
    let c = 1.0 / (1.0 + lambda);
    let tp = 2.0 * PI;
    let (sx, sy) = ((tp * x).sin(), (tp * y).sin());
    let (cx, cy) = ((tp * x).cos(), (tp * y).cos());
    [
        [-tp * sx * sy + c * tp * cx * sy, tp * (cx - 1.0) * cy + c * tp * sx * cy],
        [
            -tp * (cy - 1.0) * cx + c * (1.0 - 2.0 * x) * y * (1.0 - y),
            tp * sy * sx + c * x * (1.0 - x) * (1.0 - 2.0 * y),
        ],
    ]
}

pub fn exact_forcing(p: Vec2, mu: f64, lambda: f64) -> Vec2 {
    let (x, y) = (p.x, p.y);
    let c = 1.0 / (1.0 + lambda);
    let grad_div_scale = (mu + lambda) * c;
    let pi2 = PI * PI;
    let (sx, sy) = ((2.0 * PI * x).sin(), (2.0 * PI * y).sin());
    let (cx, cy) = ((2.0 * PI * x).cos(), (2.0 * PI * y).cos());
    let f1 = 4.0 * pi2 * mu * (2.0 * cx - 1.0) * sy + c * 8.0 * pi2 * mu * sx * sy
        - grad_div_scale * (-4.0 * pi2 * sx * sy + (1.0 - 2.0 * x) * (1.0 - 2.0 * y));
    let f2 = -4.0 * pi2 * mu * (2.0 * cy - 1.0) * sx
        + c * 2.0 * mu * (x * (1.0 - x) + y * (1.0 - y))
        - grad_div_scale * (4.0 * pi2 * cx * cy - 2.0 * x * (1.0 - x));
    Vec2::new(f1, f2)
}

fn fd_partial<F: Fn(Vec2) -> Vec2>(u: &F, p: Vec2, a: usize, b: usize, step: f64) -> f64 {
    let mut e = Vec2::zeros();
    e[b] = step;
    (u(p + e)[a] - u(p - e)[a]) / (2.0 * step)
}

/// `−div (2μ ε(u))` and `−∇ div u` of a field, by nested central differences.
fn fd_operators<F: Fn(Vec2) -> Vec2>(u: &F, p: Vec2, mu: f64, step: f64) -> (Vec2, Vec2) {
    let shear = |q: Vec2| -> [[f64; 2]; 2] {
        let g = |a, b| fd_partial(u, q, a, b, step);
        let off = mu * (g(0, 1) + g(1, 0));
        [[2.0 * mu * g(0, 0), off], [off, 2.0 * mu * g(1, 1)]]
    };
    let div = |q: Vec2| fd_partial(u, q, 0, 0, step) + fd_partial(u, q, 1, 1, step);
    let mut f_shear = Vec2::zeros();
    let mut f_vol = Vec2::zeros();
    for b in 0..2 {
        let mut e = Vec2::zeros();
        e[b] = step;
        let (sp, sm) = (shear(p + e), shear(p - e));
        for a in 0..2 {
            f_shear[a] -= (sp[a][b] - sm[a][b]) / (2.0 * step);
        }
        f_vol[b] = -(div(p + e) - div(p - e)) / (2.0 * step);
    }
    (f_shear, f_vol)
}

/// `−div σ(u)` by central differences of the closed-form `u` with step `step`.
///
/// The λ-weighted term `−λ ∇ div u` is differenced on `v/(1+λ)` only: the
/// curl part has zero divergence (see [`curl_divergence_fd`]), and
/// differencing it anyway would add rounding noise of order `λ ε / step²`.
pub fn finite_difference_forcing(p: Vec2, mu: f64, lambda: f64, step: f64) -> Vec2 {
    let (shear, _) = fd_operators(&|q| exact_solution(q, lambda), p, mu, step);
    let (_, vol) = fd_operators(&compressible_part, p, mu, step);
    shear + vol * (lambda / (1.0 + lambda))
}

/// `div w` of the curl part by central differences.
pub fn curl_divergence_fd(p: Vec2, step: f64) -> f64 {
    fd_partial(&curl_part, p, 0, 0, step) + fd_partial(&curl_part, p, 1, 1, step)
}

/// Worst relative mismatch between [`exact_forcing`] and
/// [`finite_difference_forcing`] over the given points, measured against
/// `max(|f|, 1)` per point.
pub fn forcing_gate(points: &[Vec2], mu: f64, lambda: f64, step: f64) -> f64 {
    points
        .iter()
        .map(|&p| {
            let exact = exact_forcing(p, mu, lambda);
            let fd = finite_difference_forcing(p, mu, lambda, step);
            (exact - fd).norm() / exact.norm().max(1.0)
        })
        .fold(0.0, f64::max)
}
