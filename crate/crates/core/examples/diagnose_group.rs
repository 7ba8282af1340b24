//! Structural diagnostics across a spread of group actions: admissibility,
//! coercivity with witnesses, bound-to-collisions detection and the
//! rotating-circle property.

use nalgebra::DMatrix;

use symbody::diagnostics::analyze;
use symbody::{
    ActionType, GroupElement, Permutation, SymmetryProblem, SymmetryProblemSpec,
};

fn elem(rho: DMatrix<f64>, cycles: &str, n: usize) -> GroupElement {
    GroupElement::new(rho, Permutation::parse_cycles(cycles, n).unwrap()).unwrap()
}

fn report(problem: &SymmetryProblem) -> symbody::Result<()> {
    let d = analyze(problem)?;
    println!("== {:?} (|G| = {})", problem.name(), problem.full_group().order());
    let mark = |ok: bool| if ok { "ok  " } else { "FAIL" };
    println!(
        "   {} ker tau ∩ ker sigma = 1",
        mark(d.admissibility.tau_sigma_trivial.ok)
    );
    println!(
        "   {} |ker rho ∩ ker sigma| <= 2 (+ time reflection)",
        mark(d.admissibility.rho_sigma_bounded.ok)
    );
    println!(
        "   {} ker tau ∩ ker rho = 1",
        mark(d.admissibility.tau_rho_trivial.ok)
    );
    for verdict in [
        &d.admissibility.tau_sigma_trivial,
        &d.admissibility.rho_sigma_bounded,
        &d.admissibility.tau_rho_trivial,
    ] {
        if let Some(w) = &verdict.witness {
            println!("        witness: {w}");
        }
    }
    println!(
        "   coercive: {} (fixed-space dimension {})",
        d.coercive, d.fixed_space_dimension
    );
    if let Some(w) = &d.coercivity_witness {
        let rows: Vec<Vec<f64>> = (0..w.nrows())
            .map(|r| (0..w.ncols()).map(|c| w[(r, c)]).collect())
            .collect();
        println!("        fixed configuration: {rows:?}");
    }
    if d.bound_to_collisions_risk {
        println!("   BOUND TO COLLISIONS: every equivariant loop collides");
    }
    for rc in &d.rotating_circle {
        println!(
            "   rotating circle [{}]: {} ({})",
            rc.subgroup,
            rc.verdict.name(),
            rc.detail
        );
    }
    println!();
    Ok(())
}

fn main() -> symbody::Result<()> {
    let eye = DMatrix::<f64>::identity(2, 2);

    // the planar three-body dihedral group: admissible and coercive
    report(
        &SymmetryProblemSpec {
            action_type: ActionType::Dihedral,
            rot_gen: elem(eye.clone(), "(1,2,3)", 3),
            ref_gen: Some(elem(-eye.clone(), "(1,2)", 3)),
            ..SymmetryProblemSpec::unconstrained("d6_plane", 3, 2, 8)
        }
        .validate()?,
    )?;

    // trivial symmetry: admissible but nowhere near coercive
    report(&SymmetryProblemSpec::unconstrained("no_symmetry", 3, 2, 8).validate()?)?;

    // a kernel relabeling with trivial rho glues two bodies together:
    // bound to collisions
    report(
        &SymmetryProblemSpec {
            kernel_generators: vec![elem(eye.clone(), "(1,2)", 3)],
            ..SymmetryProblemSpec::unconstrained("glued_pair", 3, 2, 8)
        }
        .validate()?,
    )?;

    // a kernel containing a genuine spatial reflection: no rotating circle
    // survives it
    report(
        &SymmetryProblemSpec {
            kernel_generators: vec![elem(
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
                "(1,2)",
                2,
            )],
            ..SymmetryProblemSpec::unconstrained("mirrored_pair", 2, 2, 8)
        }
        .validate()?,
    )?;

    Ok(())
}
