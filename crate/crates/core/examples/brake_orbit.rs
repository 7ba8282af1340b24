//! A brake-type search: the time reflection pairs with a spatial mirror,
//! so the bodies sit on the mirror axis at rest at both ends of the
//! fundamental domain and the orbit retraces itself.
//!
//! Brake classes are never coercive for the inertial action (the whole
//! group fixes the boundary configurations, so arbitrarily large resting
//! configurations have arbitrarily small action); this problem runs in a
//! rotating frame, whose centrifugal term confines the minimization.

use std::path::PathBuf;

use symbody::diagnostics::verify_orbit;
use symbody::io::parse_problem;
use symbody::optim::{best_converged, multi_start, GuessKind};
use symbody::path::extend_to_period_with_velocity;

fn main() -> symbody::Result<()> {
    let path =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems/pair_brake_rotating.toml");
    let loaded = parse_problem(&path)?;
    let problem = &loaded.problem;
    println!(
        "brake action: |ker tau| = {}, boundary subgroup orders {} and {}",
        problem.kernel().order(),
        problem.h0().order(),
        problem.h1().order()
    );
    println!(
        "coercive for the inertial action: {} (fixed-space dimension {}; the \
         rotating frame confines the search regardless)",
        loaded.diagnostics.coercive, loaded.diagnostics.fixed_space_dimension
    );

    let opts = symbody::OptimizerOptions {
        restarts: 8,
        ..loaded.optimizer.clone()
    };
    let results = multi_start(problem, &opts, GuessKind::Random)?;
    for (i, r) in results.iter().enumerate() {
        println!(
            "  start {i}: {:<15} action {:<12.8} |grad| {:.2e}",
            r.termination.name(),
            r.action_value,
            r.gradient_norm
        );
    }
    let Some(best) = best_converged(&results) else {
        println!("no run converged");
        return Ok(());
    };

    // a brake orbit comes to rest at the seams; check the speed there and
    // that the configuration lies on the mirror axis
    let s = problem.samples();
    let (positions, velocities) =
        extend_to_period_with_velocity(&best.fourier_coeff, problem, s)?;
    let rest_speed = velocities[0].abs().max();
    let off_axis = positions.samples[0].column(1).abs().max();
    println!(
        "best action {:.8}; speed at the brake instant {rest_speed:.2e}, \
         distance from the mirror axis {off_axis:.2e}",
        best.action_value
    );

    let report = verify_orbit(&best.fourier_coeff, problem, 2000)?;
    println!(
        "verification: residual {:.2e}, junction {:.2e}, energy drift {:.2e}, \
         min distance {:.3}",
        report.max_equation_residual,
        report.junction_velocity_mismatch,
        report.energy_drift,
        report.min_pairwise_distance
    );
    Ok(())
}
