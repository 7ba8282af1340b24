//! Property-based invariants over generated groups, coefficients and
//! files.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;

use symbody::action::ActionEvaluator;
use symbody::group::{FiniteGroup, DEFAULT_CLOSURE_CAP};
use symbody::projectors::{fixed_space_projector, CoefficientProjector};
use symbody::{
    ActionType, CoeffLayout, GroupElement, PathCoefficients, Permutation, SymmetryProblem,
    SymmetryProblemSpec,
};

fn rotation2(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
}

fn reflection2(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[
            (2.0 * theta).cos(),
            (2.0 * theta).sin(),
            (2.0 * theta).sin(),
            -(2.0 * theta).cos(),
        ],
    )
}

/// Finite-order planar generators over three bodies.
fn generator_strategy() -> impl Strategy<Value = GroupElement> {
    let matrices = prop_oneof![
        (1u32..=6).prop_map(|k| rotation2(2.0 * PI / k as f64)),
        (0u32..8).prop_map(|j| reflection2(j as f64 * PI / 8.0)),
        Just(DMatrix::identity(2, 2)),
        Just(-DMatrix::<f64>::identity(2, 2)),
    ];
    let perms = prop_oneof![
        Just("()"),
        Just("(1,2)"),
        Just("(1,3)"),
        Just("(2,3)"),
        Just("(1,2,3)"),
        Just("(1,3,2)"),
    ];
    (matrices, perms).prop_map(|(m, p)| {
        GroupElement::new(m, Permutation::parse_cycles(p, 3).unwrap()).unwrap()
    })
}

fn group_strategy() -> impl Strategy<Value = FiniteGroup> {
    prop::collection::vec(generator_strategy(), 1..3)
        .prop_map(|gens| FiniteGroup::closure(&gens, DEFAULT_CLOSURE_CAP).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Closing an already-closed element set reproduces the same group.
    #[test]
    fn closure_is_idempotent(group in group_strategy()) {
        let again = FiniteGroup::closure(group.elements(), DEFAULT_CLOSURE_CAP).unwrap();
        prop_assert_eq!(group.order(), again.order());
        for e in group.elements() {
            prop_assert!(again.contains(e));
        }
    }

    /// Every element composed with its inverse gives the identity.
    #[test]
    fn inverses_close(group in group_strategy()) {
        for e in group.elements() {
            let prod = e.compose(&e.inverse()).unwrap();
            prop_assert!(prod.is_identity(1e-12));
        }
    }

    /// Averaging projectors are idempotent, symmetric, and their range is
    /// pointwise fixed by the group.
    #[test]
    fn averaging_projector_properties(group in group_strategy()) {
        let p = fixed_space_projector(&group);
        let m = p.matrix();
        prop_assert!((m * m - m).abs().max() < 1e-10);
        prop_assert!((m - m.transpose()).abs().max() < 1e-10);
        for e in group.elements() {
            prop_assert!((e.config_matrix() * m - m).abs().max() < 1e-10);
        }
    }
}

fn three_body_problem() -> SymmetryProblem {
    SymmetryProblemSpec {
        action_type: ActionType::Dihedral,
        rot_gen: GroupElement::new(
            DMatrix::identity(2, 2),
            Permutation::parse_cycles("(1,2,3)", 3).unwrap(),
        )
        .unwrap(),
        ref_gen: Some(
            GroupElement::new(
                -DMatrix::<f64>::identity(2, 2),
                Permutation::parse_cycles("(1,2)", 3).unwrap(),
            )
            .unwrap(),
        ),
        fourier_modes: 5,
        samples: 32,
        ..SymmetryProblemSpec::unconstrained("d6_small", 3, 2, 5)
    }
    .validate()
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// The sampled path is linear in the coefficients.
    #[test]
    fn path_is_linear_in_coefficients(
        a in prop::collection::vec(-1.0f64..1.0, 28),
        b in prop::collection::vec(-1.0f64..1.0, 28),
        alpha in -2.0f64..2.0,
    ) {
        let problem = three_body_problem();
        let layout = CoeffLayout::of(&problem);
        prop_assert_eq!(layout.len(), 28);
        let ca = PathCoefficients::from_vec(layout, a.clone()).unwrap();
        let cb = PathCoefficients::from_vec(layout, b.clone()).unwrap();
        let combo_vec: Vec<f64> =
            a.iter().zip(&b).map(|(x, y)| alpha * x + y).collect();
        let cc = PathCoefficients::from_vec(layout, combo_vec).unwrap();
        let s = 16;
        let pa = symbody::build_path(&ca, s, &problem).unwrap();
        let pb = symbody::build_path(&cb, s, &problem).unwrap();
        let pc = symbody::build_path(&cc, s, &problem).unwrap();
        for h in 0..=s {
            let expected = &pa.samples[h] * alpha + &pb.samples[h];
            prop_assert!((&pc.samples[h] - expected).abs().max() < 1e-12);
        }
    }

    /// Projection is idempotent and evaluation is invariant under repeated
    /// projection.
    #[test]
    fn projection_idempotent_on_random_coefficients(
        raw in prop::collection::vec(-1.0f64..1.0, 28),
    ) {
        let problem = three_body_problem();
        let layout = CoeffLayout::of(&problem);
        let projector = CoefficientProjector::for_problem(&problem).unwrap();
        let coeffs = PathCoefficients::from_vec(layout, raw).unwrap();
        let once = projector.project_coefficients(&coeffs);
        let twice = projector.project_coefficients(&once);
        for i in 0..layout.len() {
            prop_assert!((once.flat()[i] - twice.flat()[i]).abs() < 1e-12);
        }
    }

    /// Stored results reload with bit-identical coefficients, whatever the
    /// values are.
    #[test]
    fn result_files_round_trip(raw in prop::collection::vec(-1.0f64..1.0, 28)) {
        let problem = three_body_problem();
        let layout = CoeffLayout::of(&problem);
        let projector = CoefficientProjector::for_problem(&problem).unwrap();
        let coeffs =
            projector.project_coefficients(&PathCoefficients::from_vec(layout, raw).unwrap());
        let evaluator = ActionEvaluator::for_problem(&problem).unwrap();
        let action = match evaluator.value(coeffs.flat()) {
            Ok(v) => v,
            // collision-grade paths have no finite action to store
            Err(_) => return Ok(()),
        };
        let result = symbody::MinimizationResult {
            fourier_coeff: coeffs.clone(),
            action_value: action,
            gradient_norm: 1.0,
            iterations: 0,
            termination: symbody::Termination::MaxIterations,
            trace: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = symbody::io::store_result(&result, &problem, None, None, dir.path()).unwrap();
        let (reread_problem, reread) = symbody::io::read_path_from_file(&path).unwrap();
        prop_assert_eq!(reread_problem.fingerprint(), problem.fingerprint());
        prop_assert_eq!(reread.flat(), coeffs.flat());
    }
}
