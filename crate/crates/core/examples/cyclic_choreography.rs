//! A cyclic-type search: three equal masses constrained to chase each other
//! around one closed curve. Starting from the circular guess the minimizer
//! is the rotating equilateral triangle, whose action has a closed form to
//! compare against.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use symbody::diagnostics::verify_orbit;
use symbody::optim::{initial_guess, minimize, GuessKind, OptimizerOptions};
use symbody::{ActionType, GroupElement, Permutation, SymmetryProblemSpec};

fn main() -> symbody::Result<()> {
    let problem = SymmetryProblemSpec {
        action_type: ActionType::Cyclic,
        rot_gen: GroupElement::new(
            DMatrix::identity(2, 2),
            Permutation::parse_cycles("(1,2,3)", 3)?,
        )?,
        fourier_modes: 10,
        ..SymmetryProblemSpec::unconstrained("z3_ring", 3, 2, 10)
    }
    .validate()?;
    println!(
        "cyclic action, |G/ker tau| = {}, whole period T = {}*pi",
        problem.quotient_order(),
        problem.quotient_order()
    );

    let guess = initial_guess(&problem, GuessKind::Circular, 0)?;
    let result = minimize(&problem, &guess, &OptimizerOptions::default())?;
    println!(
        "{} after {} iterations: action {:.8}, |grad| {:.2e}",
        result.termination.name(),
        result.iterations,
        result.action_value,
        result.gradient_norm
    );

    // rotating equilateral triangle: each body loops once over T = 3π, so
    // ω = 2/3 and the radius solves ω² = 1/(√3 r³)
    let w: f64 = 2.0 / 3.0;
    let r = (1.0 / (3.0_f64.sqrt() * w * w)).powf(1.0 / 3.0);
    let analytic = PI * (1.5 * w * w * r * r + 3.0_f64.sqrt() / r);
    println!("closed-form equilateral action {analytic:.8}");

    let report = verify_orbit(&result.fourier_coeff, &problem, 2000)?;
    println!(
        "verification: residual {:.2e}, junction {:.2e}, energy drift {:.2e}",
        report.max_equation_residual,
        report.junction_velocity_mismatch,
        report.energy_drift
    );
    Ok(())
}
