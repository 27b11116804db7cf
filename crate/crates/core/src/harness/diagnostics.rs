use std::fmt::Write as _;
use std::path::Path;

use super::checks::{
    min_eigenvalue, patch_fields, patch_test_error, projector_suite, sample_points, structural_identities,
};
use super::manufactured::{curl_divergence_fd, forcing_gate};
use crate::error::Result;
use crate::mesh::{generate_hex_mesh, generate_square_mesh, MeshFamily, PolygonalMesh, DEFAULT_LLOYD_ITERATIONS};
use crate::method_ks::infsup_estimate;
use crate::method_nc::korn_quotient;
use crate::vem::Method;

pub const PATCH_TOL: f64 = 1e-10;
pub const IDENTITY_TOL: f64 = 1e-12;
pub const REPRODUCTION_TOL: f64 = 1e-12;
pub const CONSISTENCY_TOL: f64 = 1e-11;
pub const FORCING_TOL: f64 = 1e-5;
pub const FORCING_STEP: f64 = 1e-5;
/// Required drop of the smallest eigenvalue without the jump penalty.
pub const KORN_DROP: f64 = 10.0;
pub const INFSUP_VARIATION: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct DiagnosticsConfig {
    /// Level used for the per-family checks.
    pub n: usize,
    pub rng_seed: u64,
    pub lloyd_iterations: usize,
    pub consistency_pairs: usize,
    pub structural_samples: usize,
    pub forcing_points: usize,
    pub infsup_levels: Vec<usize>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            n: 4,
            rng_seed: 20_240_601,
            lloyd_iterations: DEFAULT_LLOYD_ITERATIONS,
            consistency_pairs: 100,
            structural_samples: 10,
            forcing_points: 100,
            infsup_levels: vec![2, 4, 8],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticEntry {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct DiagnosticReport {
    pub entries: Vec<DiagnosticEntry>,
}

impl DiagnosticReport {
    fn push(&mut self, name: impl Into<String>, passed: bool, value: f64, detail: impl Into<String>) {
        self.entries.push(DiagnosticEntry {
            name: name.into(),
            passed,
            value,
            detail: detail.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn get(&self, name: &str) -> Option<&DiagnosticEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{} {}: {:.6e} {}",
                if e.passed { "PASS" } else { "FAIL" },
                e.name,
                e.value,
                e.detail
            );
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,status,value,detail\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{},{:e},\"{}\"",
                e.name,
                if e.passed { "pass" } else { "fail" },
                e.value,
                e.detail.replace('"', "'")
            );
        }
        s
    }
}

pub fn family_meshes(cfg: &DiagnosticsConfig) -> Result<Vec<(MeshFamily, PolygonalMesh)>> {
    MeshFamily::ALL
        .iter()
        .map(|&f| Ok((f, f.generate(cfg.n, cfg.rng_seed, cfg.lloyd_iterations)?)))
        .collect()
}

/// Runs every diagnostic; failures become report entries, mesh or solver
/// errors propagate.
pub fn run_diagnostics(cfg: &DiagnosticsConfig) -> Result<DiagnosticReport> {
    let mut rep = DiagnosticReport::default();
    let meshes = family_meshes(cfg)?;

    // ellipticity of the eliminated systems
    let mut best_drop: f64 = 0.0;
    for (family, mesh) in &meshes {
        let nc1 = min_eigenvalue(mesh, Method::Nc, 1.0, 1.0, 1.0)?;
        let nc0 = min_eigenvalue(mesh, Method::Nc, 1.0, 1.0, 0.0)?;
        let ks = min_eigenvalue(mesh, Method::Ks, 1.0, 1.0, 1.0)?;
        rep.push(format!("spd/nc/gamma=1/{family}"), nc1 > 0.0, nc1, "min eigenvalue");
        rep.push(format!("spd/ks/{family}"), ks > 0.0, ks, "min eigenvalue");
        let drop = nc1 / nc0;
        best_drop = best_drop.max(drop);
        rep.push(
            format!("spd/nc/gamma=0/{family}"),
            true,
            nc0,
            if nc0 <= 0.0 {
                "min eigenvalue, indefinite".to_string()
            } else {
                format!("min eigenvalue, degraded {drop:.3}x below gamma=1")
            },
        );
    }
    rep.push(
        "korn/penalty-drop",
        best_drop >= KORN_DROP,
        best_drop,
        format!("largest gamma=1 / gamma=0 min-eigenvalue ratio at n={}, need >= {KORN_DROP}", cfg.n),
    );
    // the quotient against the broken seminorm shows the h-dependence
    let mut quotients = Vec::new();
    for &n in &cfg.infsup_levels {
        let m = generate_square_mesh(n)?;
        let (q1, q0) = (korn_quotient(&m, 1.0)?, korn_quotient(&m, 0.0)?);
        rep.push(format!("korn-quotient/square/n={n}/gamma=1"), q1 > 0.0, q1, "");
        rep.push(format!("korn-quotient/square/n={n}/gamma=0"), q0 > 0.0, q0, "");
        quotients.push((q1, q0));
    }
    if let (Some(first), Some(last)) = (quotients.first(), quotients.last()) {
        let decay = first.1 / last.1;
        let hold = last.0 / first.0;
        rep.push(
            "korn-quotient/degeneration",
            decay > 4.0 && hold > 0.5,
            decay,
            format!("gamma=0 quotient falls {decay:.1}x over the levels, gamma=1 keeps {:.0}%", 100.0 * hold),
        );
    }

    // patch tests
    for (family, mesh) in &meshes {
        for method in [Method::Nc, Method::Ks] {
            let mut worst: f64 = 0.0;
            for (_, q) in patch_fields() {
                for lambda in [1.0, 1e4] {
                    worst = worst.max(patch_test_error(mesh, method, &q, 1.0, lambda, 1.0)?);
                }
            }
            rep.push(format!("patch/{method}/{family}"), worst <= PATCH_TOL, worst, "max DOF error");
        }
    }

    // structural identities and the projector suite
    for (family, mesh) in &meshes {
        for method in [Method::Nc, Method::Ks] {
            let s = structural_identities(mesh, method, cfg.structural_samples, cfg.rng_seed)?;
            rep.push(format!("mean-jump/{method}/{family}"), s.mean_jump <= IDENTITY_TOL, s.mean_jump, "");
            rep.push(format!("rot-identity/{method}/{family}"), s.global_rot <= IDENTITY_TOL, s.global_rot, "");
            rep.push(format!("div-identity/{method}/{family}"), s.divergence <= IDENTITY_TOL, s.divergence, "");
            let p = projector_suite(mesh, method, cfg.consistency_pairs, cfg.rng_seed)?;
            rep.push(
                format!("reproduction/{method}/{family}"),
                p.reproduction <= REPRODUCTION_TOL,
                p.reproduction,
                "",
            );
            rep.push(
                format!("consistency/{method}/{family}"),
                p.consistency <= CONSISTENCY_TOL,
                p.consistency,
                format!("{} random pairs", cfg.consistency_pairs),
            );
            rep.push(
                format!("kernel/{method}/{family}"),
                p.min_kernel_dim == 3 && p.max_kernel_dim == 3,
                p.max_kernel_dim as f64,
                format!("kernel dimensions in [{}, {}]", p.min_kernel_dim, p.max_kernel_dim),
            );
        }
    }

    // inf-sup
    let mut betas = Vec::new();
    for &n in &cfg.infsup_levels {
        let b = infsup_estimate(&generate_square_mesh(n)?)?;
        rep.push(format!("infsup/square/n={n}"), b > 0.0, b, "");
        betas.push(b);
    }
    let (lo, hi) = betas.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    let variation = (hi - lo) / hi;
    rep.push("infsup/variation", variation < INFSUP_VARIATION, variation, "(max - min) / max over levels");
    for n in [2, 4] {
        let b = infsup_estimate(&generate_hex_mesh(n)?)?;
        rep.push(format!("infsup/hex/n={n}"), b > 0.0, b, "");
    }

    // forcing
    let pts = sample_points(cfg.forcing_points, cfg.rng_seed);
    for lambda in [1.0, 1e4] {
        let g = forcing_gate(&pts, 1.0, lambda, FORCING_STEP);
        rep.push(format!("forcing/lambda={lambda}"), g <= FORCING_TOL, g, "finite-difference mismatch");
    }
    let div = pts.iter().map(|&p| curl_divergence_fd(p, FORCING_STEP).abs()).fold(0.0, f64::max);
    rep.push("forcing/curl-divergence", div <= 1e-8, div, "");
    Ok(rep)
}

/// Runs the diagnostics and writes `diagnostics.txt` and `diagnostics.csv`.
pub fn write_diagnostics(cfg: &DiagnosticsConfig, out_dir: &Path) -> Result<DiagnosticReport> {
    let rep = run_diagnostics(cfg)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("diagnostics.txt"), rep.to_text())?;
    std::fs::write(out_dir.join("diagnostics.csv"), rep.to_csv())?;
    Ok(rep)
}
