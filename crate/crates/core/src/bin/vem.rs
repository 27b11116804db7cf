use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vem_elasticity::assembly::{LinearSolver, SolveOptions};
use vem_elasticity::harness::{run_convergence_study, solve_manufactured, write_diagnostics, CaseParams, DiagnosticsConfig, StudyConfig};
use vem_elasticity::mesh::{write_mesh, MeshFamily, MeshSource, DEFAULT_LLOYD_ITERATIONS};
use vem_elasticity::method_nc::DEFAULT_GAMMA;
use vem_elasticity::vem::Method;
use vem_elasticity::Result;

const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser)]
#[command(name = "vem", version, about = "Virtual element solvers for planar linear elasticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the manufactured problem on one mesh.
    Solve {
        #[arg(long)]
        method: Method,
        /// square, hex, voronoi or file:PATH
        #[arg(long)]
        mesh: MeshSource,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// cg, direct or auto
        #[arg(long, default_value = "cg")]
        solver: LinearSolver,
        /// Also write the reduced matrix in MatrixMarket format.
        #[arg(long)]
        matrix: bool,
        /// Output prefix; writes PREFIX.solution.csv and PREFIX.errors.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a convergence study from a TOML config.
    Study {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Exit with status 2 when a rate or locking window fails.
        #[arg(long)]
        check: bool,
    },
    /// Run the eigenvalue, patch, identity and inf-sup diagnostics.
    Diagnose {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Generate a mesh and write it in the text mesh format.
    Meshgen {
        #[arg(long)]
        family: MeshFamily,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_LLOYD_ITERATIONS)]
        lloyd: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve {
            method,
            mesh,
            n,
            lambda,
            mu,
            gamma,
            seed,
            tol,
            solver,
            matrix,
            out,
        } => {
            let m = mesh.load(n, seed, DEFAULT_LLOYD_ITERATIONS)?;
            let params = CaseParams { method, mu, lambda, gamma };
            let opts = SolveOptions {
                tol,
                solver,
                ..Default::default()
            };
            let (sol, err) = solve_manufactured(&m, &params, opts)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut w = BufWriter::new(File::create(with_suffix(&out, ".solution.csv"))?);
            writeln!(w, "dof,value")?;
            for (i, v) in sol.values.iter().enumerate() {
                writeln!(w, "{i},{v:e}")?;
            }
            w.flush()?;
            let summary = format!(
                "method {method}\nmesh {}\nh {:e}\nlambda {lambda}\nmu {mu}\ndofs {}\nE_e {:e}\nE_2 {:e}\niterations {}\nresidual {:e}\n",
                mesh.label(),
                m.h(),
                sol.dofs(),
                err.energy,
                err.l2,
                sol.iterations,
                sol.residual
            );
            std::fs::write(with_suffix(&out, ".errors.txt"), &summary)?;
            if matrix {
                let f = BufWriter::new(File::create(with_suffix(&out, ".mtx"))?);
                sol.system.matrix.write_matrix_market(f)?;
            }
            print!("{summary}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Study { config, out, check } => {
            let cfg = match config {
                Some(p) => StudyConfig::from_toml(&std::fs::read_to_string(p)?)?,
                None => StudyConfig::default(),
            };
            let report = run_convergence_study(&cfg, &out)?;
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if check && !report.all_passed() {
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Diagnose { out, n, seed } => {
            let cfg = DiagnosticsConfig {
                n,
                rng_seed: seed,
                ..Default::default()
            };
            let report = write_diagnostics(&cfg, &out)?;
            print!("{}", report.to_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::Meshgen {
            family,
            n,
            seed,
            lloyd,
            out,
        } => {
            let m = family.generate(n, seed, lloyd)?;
            write_mesh(&m, BufWriter::new(File::create(&out)?))?;
            println!(
                "{family} n={n}: {} polygons, {} vertices, h = {:e}",
                m.num_polygons(),
                m.num_vertices(),
                m.h()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
