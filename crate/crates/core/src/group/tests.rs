use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::*;
use crate::potential::PotentialModel;

pub(crate) fn rotation2(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
}

pub(crate) fn elem(rho: DMatrix<f64>, cycles: &str, n: usize) -> GroupElement {
    GroupElement::new(rho, Permutation::parse_cycles(cycles, n).unwrap()).unwrap()
}

/// The order-6 dihedral generators of the planar three-body example:
/// a relabeling 3-cycle and the antipodal map swapping two bodies.
pub(crate) fn d6_generators() -> (GroupElement, GroupElement) {
    let rot = elem(DMatrix::identity(2, 2), "(1,2,3)", 3);
    let refl = elem(-DMatrix::<f64>::identity(2, 2), "(1,2)", 3);
    (rot, refl)
}

pub(crate) fn d6_problem_with_modes(fourier_modes: usize) -> SymmetryProblem {
    let (rot, refl) = d6_generators();
    SymmetryProblemSpec {
        name: "d6_plane".into(),
        bodies: 3,
        dim: 2,
        masses: vec![1.0, 1.0, 1.0],
        action_type: ActionType::Dihedral,
        kernel_generators: vec![],
        rot_gen: rot,
        ref_gen: Some(refl),
        omega: DMatrix::zeros(2, 2),
        fourier_modes,
        potential: PotentialModel::newtonian(),
        samples: 200,
        closure_cap: DEFAULT_CLOSURE_CAP,
    }
    .validate()
    .unwrap()
}

pub(crate) fn d6_problem() -> SymmetryProblem {
    d6_problem_with_modes(24)
}

#[test]
fn cycle_parsing_round_trips() {
    let p = Permutation::parse_cycles("(1,2,3)", 3).unwrap();
    assert_eq!(p.images(), &[1, 2, 0]);
    assert_eq!(p.to_cycles(), "(1,2,3)");
    let q = Permutation::parse_cycles(" (1, 2) (3 ,4) ", 5).unwrap();
    assert_eq!(q.images(), &[1, 0, 3, 2, 4]);
    assert_eq!(q.to_cycles(), "(1,2)(3,4)");
    assert!(Permutation::parse_cycles("()", 3).unwrap().is_identity());
    assert!(Permutation::parse_cycles("", 3).unwrap().is_identity());
}

#[test]
fn cycle_parsing_rejects_bad_input() {
    assert!(Permutation::parse_cycles("(1,4)", 3).is_err());
    assert!(Permutation::parse_cycles("(0,1)", 3).is_err());
    assert!(Permutation::parse_cycles("(1,2)(2,3)", 3).is_err());
    assert!(Permutation::parse_cycles("1,2", 3).is_err());
}

#[test]
fn compose_identity_is_neutral() {
    let (rot, _) = d6_generators();
    let id = GroupElement::identity(3, 2);
    assert!(id.compose(&rot).unwrap().approx_eq(&rot, 1e-15));
    assert!(rot.compose(&id).unwrap().approx_eq(&rot, 1e-15));
}

#[test]
fn reflection_squares_to_identity() {
    let (_, refl) = d6_generators();
    let sq = refl.compose(&refl).unwrap();
    assert!(sq.is_identity(1e-15));
}

#[test]
fn three_cycle_cubes_to_identity() {
    let (rot, _) = d6_generators();
    let cubed = rot.compose(&rot).unwrap().compose(&rot).unwrap();
    assert!(cubed.is_identity(1e-15));
}

#[test]
fn d6_closure_has_six_elements() {
    let (rot, refl) = d6_generators();
    let group = FiniteGroup::closure(&[rot, refl], DEFAULT_CLOSURE_CAP).unwrap();
    assert_eq!(group.order(), 6);
}

#[test]
fn trivial_closure() {
    let group =
        FiniteGroup::closure(&[GroupElement::identity(2, 2)], DEFAULT_CLOSURE_CAP).unwrap();
    assert_eq!(group.order(), 1);
}

#[test]
fn half_turn_closure_has_two_elements() {
    let half_turn = elem(rotation2(PI), "", 2);
    let group = FiniteGroup::closure(&[half_turn], DEFAULT_CLOSURE_CAP).unwrap();
    assert_eq!(group.order(), 2);
}

#[test]
fn irrational_rotation_overflows() {
    let e = elem(rotation2(1.0), "", 2);
    match FiniteGroup::closure(&[e], 50) {
        Err(Error::ClosureOverflow { cap: 50 }) => {}
        other => panic!("expected overflow, got {other:?}"),
    }
}

#[test]
fn closure_is_idempotent() {
    let (rot, refl) = d6_generators();
    let group = FiniteGroup::closure(&[rot, refl], DEFAULT_CLOSURE_CAP).unwrap();
    let again =
        FiniteGroup::closure(group.elements(), DEFAULT_CLOSURE_CAP).unwrap();
    assert_eq!(group.order(), again.order());
    for e in group.elements() {
        assert!(again.contains(e));
    }
}

#[test]
fn every_element_inverts() {
    let (rot, refl) = d6_generators();
    let group = FiniteGroup::closure(&[rot, refl], DEFAULT_CLOSURE_CAP).unwrap();
    for e in group.elements() {
        let prod = e.compose(&e.inverse()).unwrap();
        assert!(prod.sigma().is_identity());
        assert!(
            (prod.rho() - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-12,
            "inverse defect too large"
        );
    }
}

#[test]
fn quotient_order_of_three_cycle_is_three() {
    let (rot, _) = d6_generators();
    let kernel = FiniteGroup::trivial(3, 2);
    assert_eq!(quotient_order(&rot, &kernel, 100).unwrap(), 3);
}

#[test]
fn quotient_order_of_identity_is_one() {
    let kernel = FiniteGroup::trivial(2, 2);
    let id = GroupElement::identity(2, 2);
    assert_eq!(quotient_order(&id, &kernel, 100).unwrap(), 1);
}

#[test]
fn quotient_order_of_quarter_turn_block_is_four() {
    // R(pi/2) embedded in a 4x4 block matrix with an identity complement
    let mut m = DMatrix::<f64>::identity(4, 4);
    m[(0, 0)] = 0.0;
    m[(0, 1)] = -1.0;
    m[(1, 0)] = 1.0;
    m[(1, 1)] = 0.0;
    let e = GroupElement::new(m, Permutation::identity(2)).unwrap();
    let kernel = FiniteGroup::trivial(2, 4);
    assert_eq!(quotient_order(&e, &kernel, 100).unwrap(), 4);
}

/// Brute-force coset enumeration: the order of gK inside the quotient of
/// the closure of K ∪ {g}.
fn coset_order(g: &GroupElement, kernel: &FiniteGroup) -> usize {
    let mut power = g.clone();
    let mut order = 1;
    loop {
        // the coset power^j K equals K exactly when power^j ∈ K
        if kernel.contains(&power) {
            return order;
        }
        power = power.compose(g).unwrap();
        order += 1;
        assert!(order <= 1000, "runaway coset enumeration");
    }
}

#[test]
fn quotient_order_matches_coset_enumeration() {
    let cases: Vec<(GroupElement, Vec<GroupElement>)> = vec![
        (elem(rotation2(PI / 3.0), "", 3), vec![]),
        (
            elem(rotation2(PI / 2.0), "", 3),
            vec![elem(rotation2(PI), "", 3)],
        ),
        (
            elem(DMatrix::identity(2, 2), "(1,2,3)", 3),
            vec![],
        ),
        (
            elem(rotation2(2.0 * PI / 3.0), "(1,2)", 3),
            vec![],
        ),
    ];
    for (g, kernel_gens) in cases {
        let mut gens = kernel_gens.clone();
        gens.push(GroupElement::identity(3, 2));
        let kernel = FiniteGroup::closure(&gens, DEFAULT_CLOSURE_CAP).unwrap();
        assert_eq!(
            quotient_order(&g, &kernel, 1000).unwrap(),
            coset_order(&g, &kernel),
        );
    }
}

#[test]
fn lagrange_divisibility() {
    let (rot, refl) = d6_generators();
    let kernel = FiniteGroup::closure(
        &[elem(-DMatrix::<f64>::identity(2, 2), "", 3)],
        DEFAULT_CLOSURE_CAP,
    )
    .unwrap();
    let mut gens = kernel.elements().to_vec();
    gens.push(rot);
    gens.push(refl);
    let group = FiniteGroup::closure(&gens, DEFAULT_CLOSURE_CAP).unwrap();
    assert_eq!(group.order() % kernel.order(), 0);
    assert!(kernel.is_subgroup_of(&group));
}

#[test]
fn d6_boundary_subgroups() {
    let problem = d6_problem();
    assert_eq!(problem.quotient_order(), 6);
    assert_eq!(problem.h0().order(), 2);
    assert_eq!(problem.h1().order(), 2);
    // H0 contains the reflection generator, H1 contains rot ∘ ref
    let (rot, refl) = d6_generators();
    assert!(problem.h0().contains(&refl));
    let rs = rot.compose(&refl).unwrap();
    assert!(problem.h1().contains(&rs));
    // both contain the kernel
    assert!(problem.kernel().is_subgroup_of(problem.h0()));
    assert!(problem.kernel().is_subgroup_of(problem.h1()));
}

#[test]
fn cyclic_boundary_subgroups_equal_kernel() {
    let spec = SymmetryProblemSpec {
        name: "z3".into(),
        bodies: 3,
        dim: 2,
        masses: vec![1.0; 3],
        action_type: ActionType::Cyclic,
        kernel_generators: vec![],
        rot_gen: elem(DMatrix::identity(2, 2), "(1,2,3)", 3),
        ref_gen: None,
        omega: DMatrix::zeros(2, 2),
        fourier_modes: 4,
        potential: PotentialModel::newtonian(),
        samples: 32,
        closure_cap: DEFAULT_CLOSURE_CAP,
    };
    let problem = spec.validate().unwrap();
    assert_eq!(problem.h0().order(), 1);
    assert_eq!(problem.h1().order(), 1);
    assert_eq!(problem.quotient_order(), 3);
}

#[test]
fn brake_boundary_subgroups() {
    let spec = SymmetryProblemSpec {
        name: "brake".into(),
        bodies: 2,
        dim: 2,
        masses: vec![1.0, 1.0],
        action_type: ActionType::Brake,
        kernel_generators: vec![],
        rot_gen: GroupElement::identity(2, 2),
        ref_gen: Some(elem(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            "",
            2,
        )),
        omega: DMatrix::zeros(2, 2),
        fourier_modes: 4,
        potential: PotentialModel::newtonian(),
        samples: 32,
        closure_cap: DEFAULT_CLOSURE_CAP,
    };
    let problem = spec.validate().unwrap();
    assert_eq!(problem.quotient_order(), 2);
    assert_eq!(problem.h0().order(), 2);
    assert_eq!(problem.h1().order(), 2);
}

#[test]
fn mass_compatibility_examples() {
    let (rot, refl) = d6_generators();
    let group = FiniteGroup::closure(&[rot, refl], DEFAULT_CLOSURE_CAP).unwrap();
    assert!(check_mass_compatibility(&[1.0, 1.0, 1.0], &group).is_ok());

    let trivial = FiniteGroup::trivial(3, 2);
    assert!(check_mass_compatibility(&[1.0, 2.0, 3.0], &trivial).is_ok());

    let swap = FiniteGroup::closure(
        &[elem(DMatrix::identity(2, 2), "(1,2)", 3)],
        DEFAULT_CLOSURE_CAP,
    )
    .unwrap();
    let violation = check_mass_compatibility(&[1.0, 2.0, 1.0], &swap).unwrap_err();
    assert_eq!(
        (violation.body_i, violation.body_j).min((violation.body_j, violation.body_i)),
        (0, 1)
    );
    assert_ne!(violation.mass_i, violation.mass_j);
}

#[test]
fn non_orthogonal_matrix_rejected() {
    let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    assert!(GroupElement::new(m, Permutation::identity(2)).is_err());
}

#[test]
fn validation_collects_issues() {
    let spec = SymmetryProblemSpec {
        name: "bad".into(),
        bodies: 2,
        dim: 2,
        masses: vec![1.0, -1.0],
        action_type: ActionType::Cyclic,
        kernel_generators: vec![],
        rot_gen: GroupElement::identity(2, 2),
        ref_gen: None,
        omega: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        fourier_modes: 4,
        potential: PotentialModel::newtonian(),
        samples: 32,
        closure_cap: DEFAULT_CLOSURE_CAP,
    };
    match spec.validate() {
        Err(Error::Validation { issues }) => {
            assert!(issues.iter().any(|m| m.contains("mass")));
            assert!(issues.iter().any(|m| m.contains("antisymmetric")));
        }
        other => panic!("expected validation failure, got {other:?}"),
    }
}

#[test]
fn incompatible_masses_rejected_at_validation() {
    let spec = SymmetryProblemSpec {
        name: "bad_masses".into(),
        bodies: 3,
        dim: 2,
        masses: vec![1.0, 2.0, 1.0],
        action_type: ActionType::Cyclic,
        kernel_generators: vec![],
        rot_gen: elem(DMatrix::identity(2, 2), "(1,2,3)", 3),
        ref_gen: None,
        omega: DMatrix::zeros(2, 2),
        fourier_modes: 4,
        potential: PotentialModel::newtonian(),
        samples: 32,
        closure_cap: DEFAULT_CLOSURE_CAP,
    };
    assert!(spec.validate().is_err());
}

#[test]
fn fingerprint_stable_and_sensitive() {
    let p1 = d6_problem();
    let p2 = d6_problem();
    assert_eq!(p1.fingerprint(), p2.fingerprint());
    let mut spec = SymmetryProblemSpec::unconstrained("d6_plane", 3, 2, 24);
    spec.masses = vec![1.0, 1.0, 2.0];
    let p3 = spec.validate().unwrap();
    assert_ne!(p1.fingerprint(), p3.fingerprint());
}
