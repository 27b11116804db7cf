use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use super::errors::{solve_manufactured, CaseParams};
use super::svg::{LogLogPlot, Series, PALETTE};
use crate::assembly::{LinearSolver, SolveOptions};
use crate::error::{Result, VemError};
use crate::mesh::{MeshFamily, PolygonalMesh, DEFAULT_LLOYD_ITERATIONS};
use crate::vem::Method;

pub const CSV_HEADER: &str = "method,family,n,h,lambda,dofs,E_e,E_2,rate_Ee,rate_E2,iters,seconds";

fn default_methods() -> Vec<Method> {
    vec![Method::Nc, Method::Ks]
}
fn default_families() -> Vec<MeshFamily> {
    MeshFamily::ALL.to_vec()
}
fn default_levels() -> Vec<usize> {
    vec![4, 8, 16, 32]
}
fn default_lambdas() -> Vec<f64> {
    vec![1.0, 1e4]
}
fn one() -> f64 {
    1.0
}
fn default_seed() -> u64 {
    20_240_601
}
fn default_lloyd() -> usize {
    DEFAULT_LLOYD_ITERATIONS
}
fn default_tol() -> f64 {
    1e-12
}
fn default_solver() -> LinearSolver {
    LinearSolver::Auto
}

fn yes() -> bool {
    true
}

/// Acceptance windows applied by `study --check`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Windows {
    #[serde(default = "Windows::energy_default")]
    pub energy_rate: [f64; 2],
    #[serde(default = "Windows::l2_default")]
    pub l2_rate: [f64; 2],
    /// Bound on `E_e(λ) / E_e(λ_min)` at each level.
    #[serde(default = "Windows::locking_default")]
    pub locking_ratio: f64,
}

impl Windows {
    fn energy_default() -> [f64; 2] {
        [0.8, 1.2]
    }
    fn l2_default() -> [f64; 2] {
        [1.7, 2.3]
    }
    fn locking_default() -> f64 {
        10.0
    }
}

impl Default for Windows {
    fn default() -> Self {
        Self {
            energy_rate: Self::energy_default(),
            l2_rate: Self::l2_default(),
            locking_ratio: Self::locking_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_families")]
    pub families: Vec<MeshFamily>,
    #[serde(default = "default_levels")]
    pub levels: Vec<usize>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "default_seed")]
    pub rng_seed: u64,
    #[serde(default = "default_lloyd")]
    pub lloyd_iterations: usize,
    /// Relative residual for CG.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// `cg`, `direct` or `auto` (CG with a direct fallback).
    #[serde(default = "default_solver")]
    pub solver: LinearSolver,
    /// Write wall times; disable for byte-reproducible CSV files.
    #[serde(default = "yes")]
    pub timings: bool,
    #[serde(default)]
    pub windows: Windows,
}

impl Default for StudyConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(text).map_err(|e| VemError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(VemError::Config(m.to_string()));
        if self.levels.is_empty() {
            return fail("level list is empty");
        }
        if self.methods.is_empty() || self.families.is_empty() || self.lambdas.is_empty() {
            return fail("methods, families and lambdas must be non-empty");
        }
        if self.levels.iter().any(|&n| n < 2) {
            return fail("levels must be at least 2");
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return fail("levels must be strictly increasing");
        }
        if !(self.mu > 0.0) || self.lambdas.iter().any(|l| !(*l >= 0.0)) || !(self.gamma >= 0.0) {
            return fail("need mu > 0, lambda >= 0 and gamma >= 0");
        }
        if !(self.tol > 0.0) {
            return fail("tol must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub method: Method,
    pub family: MeshFamily,
    pub n: usize,
    pub h: f64,
    pub lambda: f64,
    pub dofs: usize,
    pub e_energy: f64,
    pub e_l2: f64,
    pub rate_energy: Option<f64>,
    pub rate_l2: Option<f64>,
    pub iterations: usize,
    pub seconds: f64,
}

impl ConvergenceRecord {
    pub fn csv_row(&self, timings: bool) -> String {
        let rate = |r: Option<f64>| r.map(|r| format!("{r:.4}")).unwrap_or_default();
        let secs = if timings { format!("{:.3}", self.seconds) } else { String::new() };
        format!(
            "{},{},{},{:.6e},{},{},{:.6e},{:.6e},{},{},{},{}",
            self.method,
            self.family,
            self.n,
            self.h,
            self.lambda,
            self.dofs,
            self.e_energy,
            self.e_l2,
            rate(self.rate_energy),
            rate(self.rate_l2),
            self.iterations,
            secs
        )
    }
}

/// Observed order between consecutive levels, against the measured `h`.
pub fn observed_rate(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
}

/// Fills the rate columns of records grouped by (method, family, λ), in
/// level order.
pub fn fill_rates(records: &mut [ConvergenceRecord]) {
    let mut last: BTreeMap<(Method, MeshFamily, u64), usize> = BTreeMap::new();
    for i in 0..records.len() {
        let key = (records[i].method, records[i].family, records[i].lambda.to_bits());
        if let Some(&j) = last.get(&key) {
            let (a, b) = (&records[j], &records[i]);
            let re = observed_rate(a.e_energy, b.e_energy, a.h, b.h);
            let r2 = observed_rate(a.e_l2, b.e_l2, a.h, b.h);
            records[i].rate_energy = Some(re);
            records[i].rate_l2 = Some(r2);
        }
        last.insert(key, i);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub records: Vec<ConvergenceRecord>,
    pub checks: Vec<StudyCheck>,
}

impl StudyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Window checks: final-interval rates per series, and the ratio of energy
/// errors at each λ against the smallest λ at every level.
pub fn evaluate_checks(records: &[ConvergenceRecord], windows: &Windows) -> Vec<StudyCheck> {
    let mut checks = Vec::new();
    let mut series: BTreeMap<(Method, MeshFamily, u64), Vec<&ConvergenceRecord>> = BTreeMap::new();
    for r in records {
        series.entry((r.method, r.family, r.lambda.to_bits())).or_default().push(r);
    }
    for ((method, family, lb), rs) in &series {
        let lambda = f64::from_bits(*lb);
        let last = rs.last().expect("non-empty series");
        let (Some(re), Some(r2)) = (last.rate_energy, last.rate_l2) else {
            continue;
        };
        let ok_e = re >= windows.energy_rate[0] && re <= windows.energy_rate[1];
        let ok_2 = r2 >= windows.l2_rate[0] && r2 <= windows.l2_rate[1];
        checks.push(StudyCheck {
            name: format!("rate {method}/{family}/lambda={lambda}"),
            passed: ok_e && ok_2,
            detail: format!("final rate E_e {re:.3}, E_2 {r2:.3}"),
        });
    }
    let mut by_level: BTreeMap<(Method, MeshFamily, usize), Vec<&ConvergenceRecord>> = BTreeMap::new();
    for r in records {
        by_level.entry((r.method, r.family, r.n)).or_default().push(r);
    }
    for ((method, family, n), rs) in &by_level {
        let base = rs.iter().min_by(|a, b| a.lambda.total_cmp(&b.lambda)).expect("non-empty");
        for r in rs.iter().filter(|r| r.lambda > base.lambda) {
            let ratio = r.e_energy / base.e_energy;
            checks.push(StudyCheck {
                name: format!("locking {method}/{family}/n={n}/lambda={}", r.lambda),
                passed: ratio <= windows.locking_ratio,
                detail: format!("E_e ratio {ratio:.3} against lambda={}", base.lambda),
            });
        }
    }
    checks
}

fn write_csv(path: &Path, records: &[ConvergenceRecord], timings: bool) -> Result<()> {
    let mut text = String::with_capacity(128 * (records.len() + 1));
    text.push_str(CSV_HEADER);
    text.push('\n');
    for r in records {
        text.push_str(&r.csv_row(timings));
        text.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

fn lambda_tag(lambda: f64) -> String {
    format!("{lambda}").replace('.', "p")
}

fn render_plots(records: &[ConvergenceRecord], cfg: &StudyConfig) -> Vec<(String, String)> {
    let mut plots = Vec::new();
    for &method in &cfg.methods {
        for &lambda in &cfg.lambdas {
            let mut series = Vec::new();
            for (fi, &family) in cfg.families.iter().enumerate() {
                let rs: Vec<&ConvergenceRecord> = records
                    .iter()
                    .filter(|r| r.method == method && r.family == family && r.lambda == lambda)
                    .collect();
                if rs.is_empty() {
                    continue;
                }
                let color = PALETTE[fi % PALETTE.len()].to_string();
                let last = rs.last().expect("non-empty");
                let fmt_rate = |r: Option<f64>| r.map(|r| format!(" ({r:.2})")).unwrap_or_default();
                series.push(Series {
                    label: format!("{family} E_e{}", fmt_rate(last.rate_energy)),
                    points: rs.iter().map(|r| (r.h, r.e_energy)).collect(),
                    color: color.clone(),
                    dashed: false,
                });
                series.push(Series {
                    label: format!("{family} E_2{}", fmt_rate(last.rate_l2)),
                    points: rs.iter().map(|r| (r.h, r.e_l2)).collect(),
                    color,
                    dashed: true,
                });
            }
            let plot = LogLogPlot {
                title: format!("{} method, lambda = {lambda}", method.name().to_uppercase()),
                x_label: "h".into(),
                y_label: "error".into(),
                series,
                guides: vec![1.0, 2.0],
            };
            plots.push((format!("convergence_{method}_lambda{}.svg", lambda_tag(lambda)), plot.render()));
        }
    }
    plots
}

/// Runs every (method, family, level, λ) case, writes `convergence.csv`
/// and one SVG per (method, λ) into `out_dir`. A failing case aborts the
/// study after the records preceding it in configuration order are written.
pub fn run_convergence_study(cfg: &StudyConfig, out_dir: &Path) -> Result<StudyReport> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mesh_keys: Vec<(MeshFamily, usize)> = cfg
        .families
        .iter()
        .flat_map(|&f| cfg.levels.iter().map(move |&n| (f, n)))
        .collect();
    let meshes: Vec<Result<PolygonalMesh>> = mesh_keys
        .par_iter()
        .map(|&(f, n)| f.generate(n, cfg.rng_seed, cfg.lloyd_iterations))
        .collect();
    let mut mesh_map = BTreeMap::new();
    for (key, m) in mesh_keys.into_iter().zip(meshes) {
        mesh_map.insert(key, m?);
    }

    let mut cases = Vec::new();
    for &method in &cfg.methods {
        for &family in &cfg.families {
            for &lambda in &cfg.lambdas {
                for &n in &cfg.levels {
                    cases.push((method, family, lambda, n));
                }
            }
        }
    }
    let opts = SolveOptions {
        tol: cfg.tol,
        solver: cfg.solver,
        ..Default::default()
    };
    let results: Vec<Result<ConvergenceRecord>> = cases
        .par_iter()
        .map(|&(method, family, lambda, n)| {
            let mesh = &mesh_map[&(family, n)];
            let params = CaseParams {
                method,
                mu: cfg.mu,
                lambda,
                gamma: cfg.gamma,
            };
            let start = Instant::now();
            let (sol, err) = solve_manufactured(mesh, &params, opts)?;
            let seconds = start.elapsed().as_secs_f64();
            log::info!(
                "{method} {family} n={n} lambda={lambda}: E_e {:.3e} E_2 {:.3e} ({} its)",
                err.energy,
                err.l2,
                sol.iterations
            );
            Ok(ConvergenceRecord {
                method,
                family,
                n,
                h: mesh.h(),
                lambda,
                dofs: sol.dofs(),
                e_energy: err.energy,
                e_l2: err.l2,
                rate_energy: None,
                rate_l2: None,
                iterations: sol.iterations,
                seconds,
            })
        })
        .collect();

    let mut records = Vec::with_capacity(results.len());
    let mut failure = None;
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    fill_rates(&mut records);
    write_csv(&out_dir.join("convergence.csv"), &records, cfg.timings)?;
    if let Some(e) = failure {
        return Err(e);
    }
    for (name, svg) in render_plots(&records, cfg) {
        std::fs::write(out_dir.join(name), svg)?;
    }
    let checks = evaluate_checks(&records, &cfg.windows);
    let mut summary = String::new();
    for c in &checks {
        let _ = writeln!(summary, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    std::fs::write(out_dir.join("checks.txt"), summary)?;
    Ok(StudyReport { records, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_study_design() {
        let c = StudyConfig::default();
        assert_eq!(c.levels, vec![4, 8, 16, 32]);
        assert_eq!(c.lambdas, vec![1.0, 1e4]);
        assert_eq!(c.methods, vec![Method::Nc, Method::Ks]);
        assert_eq!(c.families.len(), 3);
        assert_eq!(c.windows, Windows::default());
        assert_eq!(c.lloyd_iterations, 100);
        assert_eq!(c.solver, LinearSolver::Auto);
    }

    #[test]
    fn parse_and_validate() {
        let c = StudyConfig::from_toml(
            r#"
            methods = ["ks"]
            families = ["hex"]
            levels = [2, 4]
            lambdas = [1.0]
            [windows]
            energy_rate = [0.5, 1.5]
            "#,
        )
        .unwrap();
        assert_eq!(c.methods, vec![Method::Ks]);
        assert_eq!(c.windows.energy_rate, [0.5, 1.5]);
        assert_eq!(c.windows.l2_rate, [1.7, 2.3]);
        assert!(matches!(StudyConfig::from_toml("levels = []"), Err(VemError::Config(_))));
        assert!(StudyConfig::from_toml("levels = [4, 4]").is_err());
        assert!(StudyConfig::from_toml("colour = 1").is_err());
        assert!(StudyConfig::from_toml("methods = [\"fem\"]").is_err());
        assert_eq!(StudyConfig::from_toml("solver = \"direct\"").unwrap().solver, LinearSolver::Direct);
        assert!(StudyConfig::from_toml("solver = \"lu\"").is_err());
    }

    fn rec(n: usize, h: f64, lambda: f64, e: f64) -> ConvergenceRecord {
        ConvergenceRecord {
            method: Method::Nc,
            family: MeshFamily::Square,
            n,
            h,
            lambda,
            dofs: 0,
            e_energy: e,
            e_l2: e * e,
            rate_energy: None,
            rate_l2: None,
            iterations: 0,
            seconds: 0.0,
        }
    }

    #[test]
    fn rates_and_checks() {
        let mut r = vec![rec(4, 0.5, 1.0, 0.4), rec(8, 0.25, 1.0, 0.2), rec(4, 0.5, 1e4, 0.5), rec(8, 0.25, 1e4, 5.0)];
        fill_rates(&mut r);
        assert_eq!(r[0].rate_energy, None);
        assert!((r[1].rate_energy.unwrap() - 1.0).abs() < 1e-14);
        assert!((r[1].rate_l2.unwrap() - 2.0).abs() < 1e-14);
        let checks = evaluate_checks(&r, &Windows::default());
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        assert_eq!(failed, vec!["rate nc/square/lambda=10000", "locking nc/square/n=8/lambda=10000"]);
    }

    #[test]
    fn csv_row_format() {
        let mut r = rec(4, 0.5, 1.0, 0.25);
        r.rate_energy = Some(1.0);
        assert_eq!(r.csv_row(false), "nc,square,4,5.000000e-1,1,0,2.500000e-1,6.250000e-2,1.0000,,0,");
    }
}
