//! End-to-end orbit search: load a problem file, run a seeded multi-start
//! minimization, store every converged orbit, then render and export the
//! best one.
//!
//! ```text
//! cargo run --release --example find_orbit [problem.toml] [starts]
//! ```

use std::path::PathBuf;

use symbody::diagnostics::verify_orbit;
use symbody::io::export::{export_trajectory, TrajectoryFormat};
use symbody::io::render::render_orbit;
use symbody::io::{parse_problem, store_result};
use symbody::optim::{best_converged, multi_start, GuessKind};

fn main() -> symbody::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems/d6_plane.toml")
    });
    let starts: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(8);

    let loaded = parse_problem(&path)?;
    let problem = &loaded.problem;
    println!(
        "searching {:?}: n = {}, d = {}, |G| = {}, T = {}*pi",
        problem.name(),
        problem.bodies(),
        problem.dim(),
        problem.full_group().order(),
        problem.quotient_order()
    );
    if !loaded.diagnostics.coercive {
        println!("note: the action is not coercive for this group; minimizers may escape");
    }

    let opts = symbody::OptimizerOptions {
        restarts: starts,
        ..loaded.optimizer.clone()
    };
    let results = multi_start(problem, &opts, GuessKind::Random)?;
    for (i, r) in results.iter().enumerate() {
        println!(
            "  start {i:>2}: {:<15} action = {:<12.6} |grad| = {:.2e} in {} iterations",
            r.termination.name(),
            r.action_value,
            r.gradient_norm,
            r.iterations
        );
    }

    let Some(best) = best_converged(&results) else {
        println!("no run converged; try more starts");
        return Ok(());
    };

    let verification = verify_orbit(&best.fourier_coeff, problem, 2000)?;
    println!(
        "best orbit: action {:.6}, equation residual {:.2e}, min distance {:.3}",
        best.action_value,
        verification.max_equation_residual,
        verification.min_pairwise_distance
    );

    let stored = store_result(
        best,
        problem,
        Some(&loaded.diagnostics),
        Some(&verification),
        ".",
    )?;
    println!("stored      {}", stored.display());

    let svg = stored.with_extension("svg");
    render_orbit(problem, &best.fourier_coeff, problem.samples(), &svg)?;
    println!("rendered    {}", svg.display());

    let csv = stored.with_extension("csv");
    export_trajectory(
        problem,
        &best.fourier_coeff,
        problem.samples(),
        TrajectoryFormat::Csv,
        &csv,
    )?;
    println!("exported    {}", csv.display());
    Ok(())
}
