//! Command-line front end: validate problems, search orbits, verify,
//! export and render them.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use symbody::diagnostics::{verify_orbit, DiagnosticsReport};
use symbody::io::export::{export_trajectory, TrajectoryFormat};
use symbody::io::render::render_orbit;
use symbody::io::{self, parse_problem, store_result};
use symbody::optim::{best_converged, multi_start, GuessKind, Method};
use symbody::{Error, SymmetryProblem};

#[derive(Parser)]
#[command(
    name = "symbody",
    version,
    about = "Symmetric periodic orbits of the n-body problem by action minimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a problem file and print its diagnostics report.
    Init { problem: PathBuf },
    /// Search for orbits with seeded multi-start minimization and store
    /// every converged result.
    Solve {
        problem: PathBuf,
        /// Number of independent restarts.
        #[arg(long, default_value_t = 1)]
        starts: usize,
        /// Method or chain, e.g. "bfgs" or "bfgs+newton_linesearch".
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Starting-path family.
        #[arg(long, default_value = "random")]
        guess: String,
        /// Directory receiving the per-symmetry result folder.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Re-check a stored orbit against the equations of motion.
    Verify {
        result: PathBuf,
        /// Samples per fundamental domain for the dense reconstruction.
        #[arg(long, default_value_t = 2000)]
        dense_s: usize,
    },
    /// Export the full-period trajectory of a stored orbit.
    Export {
        result: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Samples per fundamental domain.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Render a stored orbit as a static SVG.
    Render {
        result: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Samples per fundamental domain.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Print the group table and fundamental-domain data of a problem.
    Info { problem: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                Error::Validation { .. } | Error::Parse { .. } | Error::Schema { .. } => 2,
                Error::Io { .. } => 4,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> symbody::Result<ExitCode> {
    match cli.command {
        Command::Init { problem } => {
            let loaded = parse_problem(&problem)?;
            print_problem_summary(&loaded.problem);
            print_diagnostics(&loaded.diagnostics);
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve {
            problem,
            starts,
            method,
            max_iter,
            tol,
            seed,
            guess,
            out_dir,
        } => {
            let loaded = parse_problem(&problem)?;
            let mut opts = loaded.optimizer;
            if let Some(m) = method {
                opts.methods = m
                    .split('+')
                    .map(Method::parse)
                    .collect::<symbody::Result<Vec<_>>>()?;
            }
            if let Some(it) = max_iter {
                opts.max_iterations = it;
            }
            if let Some(t) = tol {
                opts.gradient_tolerance = t;
            }
            if let Some(s) = seed {
                opts.seed = s;
            }
            let kind = match guess.as_str() {
                "random" => GuessKind::Random,
                "circular" => GuessKind::Circular,
                other => {
                    return Err(Error::validation(format!(
                        "unknown guess kind {other:?}; expected random or circular"
                    )))
                }
            };
            opts.restarts = starts;
            let results = multi_start(&loaded.problem, &opts, kind)?;
            let mut stored = 0usize;
            for (i, r) in results.iter().enumerate() {
                println!(
                    "start {:>3}: {:<15} action = {:<12.6} |grad| = {:.3e}  iters = {}",
                    i,
                    r.termination.to_string(),
                    r.action_value,
                    r.gradient_norm,
                    r.iterations
                );
                if r.converged() {
                    let verification =
                        verify_orbit(&r.fourier_coeff, &loaded.problem, 2000)?;
                    let path = store_result(
                        r,
                        &loaded.problem,
                        Some(&loaded.diagnostics),
                        Some(&verification),
                        &out_dir,
                    )?;
                    println!("           stored {}", path.display());
                    stored += 1;
                }
            }
            if stored == 0 {
                eprintln!("no run converged");
                return Ok(ExitCode::from(3));
            }
            if let Some(best) = best_converged(&results) {
                println!(
                    "best converged action: {:.6} (gradient norm {:.3e})",
                    best.action_value, best.gradient_norm
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { result, dense_s } => {
            let (problem, coeffs) = io::read_path_from_file(&result)?;
            let v = verify_orbit(&coeffs, &problem, dense_s)?;
            println!("dense samples per domain: {}", v.dense_samples);
            println!("max equation residual:    {:.6e}", v.max_equation_residual);
            println!("min pairwise distance:    {:.6e}", v.min_pairwise_distance);
            println!("junction velocity gap:    {:.6e}", v.junction_velocity_mismatch);
            println!("energy drift (relative):  {:.6e}", v.energy_drift);
            Ok(ExitCode::SUCCESS)
        }
        Command::Export {
            result,
            format,
            out,
            samples,
        } => {
            let (problem, coeffs) = io::read_path_from_file(&result)?;
            let format = TrajectoryFormat::parse(&format)?;
            let ext = match format {
                TrajectoryFormat::Csv => "csv",
                TrajectoryFormat::Json => "json",
            };
            let out = out.unwrap_or_else(|| result.with_extension(ext));
            let s = samples.unwrap_or_else(|| problem.samples());
            export_trajectory(&problem, &coeffs, s, format, &out)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Render {
            result,
            out,
            samples,
        } => {
            let (problem, coeffs) = io::read_path_from_file(&result)?;
            let out = out.unwrap_or_else(|| result.with_extension("svg"));
            let s = samples.unwrap_or_else(|| problem.samples());
            render_orbit(&problem, &coeffs, s, &out)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Info { problem } => {
            let loaded = parse_problem(&problem)?;
            print_problem_summary(&loaded.problem);
            print_group_table(&loaded.problem);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_problem_summary(p: &SymmetryProblem) {
    println!("problem {:?}", p.name());
    println!("  bodies n = {}, dimension d = {}", p.bodies(), p.dim());
    println!("  masses {:?}", p.masses());
    println!("  action type: {}", p.action_type().name());
    println!(
        "  |G| = {}, |ker tau| = {}, |G/ker tau| = {}",
        p.full_group().order(),
        p.kernel().order(),
        p.quotient_order()
    );
    println!(
        "  fundamental domain [0, pi], whole period T = {}*pi = {:.6}",
        p.quotient_order(),
        p.period()
    );
    println!(
        "  boundary subgroups: |H0| = {}, |H1| = {}",
        p.h0().order(),
        p.h1().order()
    );
    println!(
        "  F = {} Fourier modes, S = {} quadrature intervals, potential {}",
        p.fourier_modes(),
        p.samples(),
        p.potential().descriptor()
    );
    if p.has_rotating_frame() {
        println!("  rotating frame, Omega = {:?}", p.omega());
    }
}

fn print_diagnostics(d: &DiagnosticsReport) {
    let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
    println!("diagnostics:");
    println!(
        "  ker tau ∩ ker sigma trivial: {}",
        mark(d.admissibility.tau_sigma_trivial.ok)
    );
    println!(
        "  |ker rho ∩ ker sigma| <= 2:  {}",
        mark(d.admissibility.rho_sigma_bounded.ok)
    );
    println!(
        "  ker tau ∩ ker rho trivial:   {}",
        mark(d.admissibility.tau_rho_trivial.ok)
    );
    for v in [
        &d.admissibility.tau_sigma_trivial,
        &d.admissibility.rho_sigma_bounded,
        &d.admissibility.tau_rho_trivial,
    ] {
        if let Some(w) = &v.witness {
            println!("    witness: {w}");
        }
    }
    println!(
        "  coercive: {} (fixed-space dimension {})",
        mark(d.coercive),
        d.fixed_space_dimension
    );
    println!(
        "  bound-to-collisions risk: {}",
        if d.bound_to_collisions_risk { "YES" } else { "no" }
    );
    for rc in &d.rotating_circle {
        println!(
            "  rotating circle [{}]: {} ({})",
            rc.subgroup,
            rc.verdict.name(),
            rc.detail
        );
    }
    println!("  spatial span dimension: {}", d.spatial_span_dimension);
    for note in &d.notes {
        println!("  note: {note}");
    }
}

fn print_group_table(p: &SymmetryProblem) {
    println!("group elements (breadth-first from the identity):");
    for (i, e) in p.full_group().elements().iter().enumerate() {
        let mut tags = Vec::new();
        if p.kernel().contains(e) {
            tags.push("ker");
        }
        if p.h0().contains(e) {
            tags.push("H0");
        }
        if p.h1().contains(e) {
            tags.push("H1");
        }
        let rho: Vec<Vec<f64>> = (0..e.dim())
            .map(|r| (0..e.dim()).map(|c| e.rho()[(r, c)]).collect())
            .collect();
        println!(
            "  #{i:<3} rho = {rho:?}  sigma = {}  {}",
            e.sigma(),
            if tags.is_empty() {
                String::new()
            } else {
                format!("[{}]", tags.join(","))
            }
        );
    }
}
