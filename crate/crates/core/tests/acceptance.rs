//! Exit criteria. Each test prints one PASS/FAIL line to stderr (uncaptured)
//! and then asserts it.

use std::io::Write;
use std::sync::OnceLock;

use vem_elasticity::assembly::LinearSolver;
use vem_elasticity::harness::checks::{
    min_eigenvalue, patch_fields, patch_test_error, projector_suite, sample_points, structural_identities,
};
use vem_elasticity::harness::manufactured::forcing_gate;
use vem_elasticity::harness::{run_convergence_study, ConvergenceRecord, StudyConfig};
use vem_elasticity::mesh::{generate_square_mesh, MeshFamily, PolygonalMesh, DEFAULT_LLOYD_ITERATIONS};
use vem_elasticity::method_ks::infsup_estimate;
use vem_elasticity::vem::Method;

const SEED: u64 = 20_240_601;
const LEVELS: [usize; 4] = [4, 8, 16, 32];
const LAMBDAS: [f64; 2] = [1.0, 1e4];
const ENERGY_RATE: [f64; 2] = [0.8, 1.2];
const L2_RATE: [f64; 2] = [1.7, 2.3];
const LOCKING_RATIO: f64 = 10.0;
const PATCH_TOL: f64 = 1e-10;
const REPRODUCTION_TOL: f64 = 1e-12;
const CONSISTENCY_TOL: f64 = 1e-11;
const CONSISTENCY_PAIRS: usize = 100;
const KERNEL_DIM: usize = 3;
const KORN_DROP: f64 = 10.0;
const INFSUP_LEVELS: [usize; 3] = [2, 4, 8];
const INFSUP_VARIATION: f64 = 0.25;
const FORCING_POINTS: usize = 100;
const FORCING_TOL: f64 = 1e-5;
const FORCING_STEP: f64 = 1e-5;
const IDENTITY_TOL: f64 = 1e-12;
const IDENTITY_SAMPLES: usize = 20;
const DIAGNOSTIC_LEVEL: usize = 4;

fn report(id: usize, title: &str, failures: &[String], summary: &str) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[acceptance] criterion {id} {title}: {status} ({summary})");
    for f in failures {
        let _ = writeln!(err, "[acceptance]     {f}");
    }
    assert!(failures.is_empty(), "criterion {id} {title} failed:\n{}", failures.join("\n"));
}

fn family_meshes() -> Vec<(MeshFamily, PolygonalMesh)> {
    MeshFamily::ALL
        .iter()
        .map(|&f| (f, f.generate(DIAGNOSTIC_LEVEL, SEED, DEFAULT_LLOYD_ITERATIONS).unwrap()))
        .collect()
}

fn study() -> &'static [ConvergenceRecord] {
    static RECORDS: OnceLock<Vec<ConvergenceRecord>> = OnceLock::new();
    RECORDS.get_or_init(|| {
        let cfg = StudyConfig {
            methods: vec![Method::Nc, Method::Ks],
            families: MeshFamily::ALL.to_vec(),
            levels: LEVELS.to_vec(),
            lambdas: LAMBDAS.to_vec(),
            mu: 1.0,
            gamma: 1.0,
            solver: LinearSolver::Auto,
            timings: false,
            ..StudyConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        run_convergence_study(&cfg, dir.path()).unwrap().records
    })
}

fn series(method: Method, family: MeshFamily, lambda: f64) -> Vec<&'static ConvergenceRecord> {
    study()
        .iter()
        .filter(|r| r.method == method && r.family == family && r.lambda == lambda)
        .collect()
}

#[test]
fn criterion_1_convergence_rates() {
    let mut failures = Vec::new();
    let mut n = 0;
    for method in [Method::Nc, Method::Ks] {
        for family in MeshFamily::ALL {
            for lambda in LAMBDAS {
                let s = series(method, family, lambda);
                assert_eq!(s.len(), LEVELS.len());
                let last = s.last().unwrap();
                let (re, r2) = (last.rate_energy.unwrap(), last.rate_l2.unwrap());
                n += 1;
                let ok = (ENERGY_RATE[0]..=ENERGY_RATE[1]).contains(&re) && (L2_RATE[0]..=L2_RATE[1]).contains(&r2);
                if !ok {
                    failures.push(format!("{method}/{family}/lambda={lambda}: E_e rate {re:.3}, E_2 rate {r2:.3}"));
                }
            }
        }
    }
    report(
        1,
        "convergence rates",
        &failures,
        &format!("{} of {n} series inside E_e {ENERGY_RATE:?}, E_2 {L2_RATE:?}", n - failures.len()),
    );
}

#[test]
fn criterion_2_locking_free() {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for method in [Method::Nc, Method::Ks] {
        for family in MeshFamily::ALL {
            let lo = series(method, family, LAMBDAS[0]);
            let hi = series(method, family, LAMBDAS[1]);
            for (a, b) in lo.iter().zip(&hi) {
                assert_eq!(a.n, b.n);
                let ratio = b.e_energy / a.e_energy;
                worst = worst.max(ratio);
                if ratio > LOCKING_RATIO {
                    failures.push(format!("{method}/{family}/n={}: E_e ratio {ratio:.3}", a.n));
                }
            }
        }
    }
    report(
        2,
        "locking-free",
        &failures,
        &format!("largest E_e(1e4)/E_e(1) = {worst:.3}, limit {LOCKING_RATIO}"),
    );
}

#[test]
fn criterion_3_patch_test() {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (family, mesh) in family_meshes() {
        for method in [Method::Nc, Method::Ks] {
            for (name, q) in patch_fields() {
                for lambda in LAMBDAS {
                    let e = patch_test_error(&mesh, method, &q, 1.0, lambda, 1.0).unwrap();
                    worst = worst.max(e);
                    if e > PATCH_TOL {
                        failures.push(format!("{method}/{family} {name} lambda={lambda}: {e:e}"));
                    }
                }
            }
        }
    }
    report(3, "patch test", &failures, &format!("max DOF error {worst:.2e}, limit {PATCH_TOL:e}"));
}

#[test]
fn criterion_4_projector_consistency() {
    let mut failures = Vec::new();
    let (mut rep, mut cons): (f64, f64) = (0.0, 0.0);
    for (family, mesh) in family_meshes() {
        for method in [Method::Nc, Method::Ks] {
            let r = projector_suite(&mesh, method, CONSISTENCY_PAIRS, SEED).unwrap();
            rep = rep.max(r.reproduction);
            cons = cons.max(r.consistency);
            if r.reproduction > REPRODUCTION_TOL {
                failures.push(format!("{method}/{family}: reproduction {:e}", r.reproduction));
            }
            if r.consistency > CONSISTENCY_TOL {
                failures.push(format!("{method}/{family}: consistency {:e}", r.consistency));
            }
            if r.min_kernel_dim != KERNEL_DIM || r.max_kernel_dim != KERNEL_DIM {
                failures.push(format!(
                    "{method}/{family}: kernel dimensions {}..{}",
                    r.min_kernel_dim, r.max_kernel_dim
                ));
            }
        }
    }
    report(
        4,
        "projector and consistency",
        &failures,
        &format!("reproduction {rep:.2e}, consistency {cons:.2e}, kernel dimension {KERNEL_DIM}"),
    );
}

#[test]
fn criterion_5_korn_dichotomy() {
    let mut failures = Vec::new();
    let mut best_drop: f64 = 0.0;
    let mut drops = Vec::new();
    for (family, mesh) in family_meshes() {
        let nc1 = min_eigenvalue(&mesh, Method::Nc, 1.0, 1.0, 1.0).unwrap();
        let nc0 = min_eigenvalue(&mesh, Method::Nc, 1.0, 1.0, 0.0).unwrap();
        let ks = min_eigenvalue(&mesh, Method::Ks, 1.0, 1.0, 1.0).unwrap();
        if nc1 <= 0.0 {
            failures.push(format!("nc gamma=1 on {family}: min eigenvalue {nc1:e}"));
        }
        if ks <= 0.0 {
            failures.push(format!("ks on {family}: min eigenvalue {ks:e}"));
        }
        let drop = if nc0 <= 0.0 { f64::INFINITY } else { nc1 / nc0 };
        best_drop = best_drop.max(drop);
        drops.push(format!("{family} {drop:.3}"));
    }
    if best_drop < KORN_DROP {
        failures.push(format!(
            "gamma=0 min eigenvalue drop below {KORN_DROP}x on every family: {}",
            drops.join(", ")
        ));
    }
    report(
        5,
        "Korn dichotomy",
        &failures,
        &format!("largest gamma=1/gamma=0 ratio {best_drop:.3}, need >= {KORN_DROP}"),
    );
}

#[test]
fn criterion_6_infsup() {
    let mut failures = Vec::new();
    let betas: Vec<f64> = INFSUP_LEVELS
        .iter()
        .map(|&n| infsup_estimate(&generate_square_mesh(n).unwrap()).unwrap())
        .collect();
    for (n, b) in INFSUP_LEVELS.iter().zip(&betas) {
        if !(*b > 0.0) {
            failures.push(format!("n={n}: beta {b:e}"));
        }
    }
    let hi = betas.iter().copied().fold(0.0, f64::max);
    let lo = betas.iter().copied().fold(f64::INFINITY, f64::min);
    let variation = (hi - lo) / hi;
    if variation >= INFSUP_VARIATION {
        failures.push(format!("variation {variation:.3}"));
    }
    report(
        6,
        "inf-sup",
        &failures,
        &format!("beta {betas:.4?}, variation {variation:.3} < {INFSUP_VARIATION}"),
    );
}

#[test]
fn criterion_7_forcing_gate() {
    let pts = sample_points(FORCING_POINTS, SEED);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for lambda in LAMBDAS {
        let g = forcing_gate(&pts, 1.0, lambda, FORCING_STEP);
        worst = worst.max(g);
        if !(g <= FORCING_TOL) {
            failures.push(format!("lambda={lambda}: relative mismatch {g:e}"));
        }
    }
    report(
        7,
        "forcing gate",
        &failures,
        &format!("max relative mismatch {worst:.2e} at {FORCING_POINTS} points, limit {FORCING_TOL:e}"),
    );
}

#[test]
fn criterion_8_structural_identities() {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (family, mesh) in family_meshes() {
        for method in [Method::Nc, Method::Ks] {
            let r = structural_identities(&mesh, method, IDENTITY_SAMPLES, SEED).unwrap();
            for (name, v) in [("mean jump", r.mean_jump), ("rot", r.global_rot), ("divergence", r.divergence)] {
                worst = worst.max(v);
                if v > IDENTITY_TOL {
                    failures.push(format!("{method}/{family} {name}: {v:e}"));
                }
            }
        }
    }
    report(
        8,
        "structural identities",
        &failures,
        &format!("max defect {worst:.2e}, limit {IDENTITY_TOL:e}"),
    );
}
